//! `.cvol` and `.mask` containers plus atomic file writing.
//!
//! `.cvol`: one JSON header line
//! `{"shape":[nx,ny,nz],"dtype":"c64le","layout":"x-fastest","domain":..}`
//! (optionally with `"units"`), a `\n`, then little-endian f32 `(re, im)` pairs.
//!
//! `.mask`: one JSON header line `{"shape":[ny,nz],"spec":{Pa,Pb,af,calib,seed}}`,
//! a `\n`, then one byte (0 or 1) per line, y-fastest.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::KspaceError;
use crate::mask::{MaskSpec, SamplingMask};
use crate::volume::{ComplexVolume, Domain};
use crate::Result;

/// Writes a file by filling a temporary sibling and renaming it into place,
/// so a failed write never leaves a partial file at `path`.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| KspaceError::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CvolHeader {
    shape: [usize; 3],
    dtype: String,
    layout: String,
    domain: Domain,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    units: Option<String>,
}

/// Encodes a volume as `.cvol` bytes.
pub fn encode_cvol(v: &ComplexVolume, units: Option<&str>) -> Result<Vec<u8>> {
    let header = CvolHeader {
        shape: v.shape(),
        dtype: "c64le".into(),
        layout: "x-fastest".into(),
        domain: v.domain(),
        units: units.map(str::to_owned),
    };
    let mut out = serde_json::to_vec(&header).map_err(|e| KspaceError::Format(e.to_string()))?;
    out.push(b'\n');
    out.reserve(v.len() * 8);
    for c in v.data() {
        out.extend_from_slice(&(c.re as f32).to_le_bytes());
        out.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    Ok(out)
}

/// Decodes `.cvol` bytes into a volume and its optional units tag.
pub fn decode_cvol(bytes: &[u8]) -> Result<(ComplexVolume, Option<String>)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| KspaceError::Format("missing header line".into()))?;
    let header: CvolHeader = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| KspaceError::Format(format!("bad header: {e}")))?;
    if header.dtype != "c64le" {
        return Err(KspaceError::Format(format!(
            "unsupported dtype {}",
            header.dtype
        )));
    }
    if header.layout != "x-fastest" {
        return Err(KspaceError::Format(format!(
            "unsupported layout {}",
            header.layout
        )));
    }
    let n: usize = header.shape.iter().product();
    let body = &bytes[nl + 1..];
    if body.len() != n * 8 {
        return Err(KspaceError::Format(format!(
            "payload has {} bytes, header implies {}",
            body.len(),
            n * 8
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok((
        ComplexVolume::new(header.shape, data, header.domain)?,
        header.units,
    ))
}

pub fn write_cvol(path: &Path, v: &ComplexVolume, units: Option<&str>) -> Result<()> {
    let bytes = encode_cvol(v, units)?;
    write_atomic(path, |w| Ok(w.write_all(&bytes)?))
}

pub fn read_cvol(path: &Path) -> Result<(ComplexVolume, Option<String>)> {
    decode_cvol(&fs::read(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskHeader {
    shape: [usize; 2],
    spec: MaskSpec,
}

pub fn encode_mask(m: &SamplingMask) -> Result<Vec<u8>> {
    let header = MaskHeader {
        shape: [m.ny(), m.nz()],
        spec: *m.spec(),
    };
    let mut out = serde_json::to_vec(&header).map_err(|e| KspaceError::Format(e.to_string()))?;
    out.push(b'\n');
    out.extend(m.plane().iter().map(|&b| b as u8));
    Ok(out)
}

pub fn decode_mask(bytes: &[u8]) -> Result<SamplingMask> {
    let mut reader = BufReader::new(bytes);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(KspaceError::Format("missing header line".into()));
    }
    let header: MaskHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| KspaceError::Format(format!("bad header: {e}")))?;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let [ny, nz] = header.shape;
    if body.len() != ny * nz {
        return Err(KspaceError::Format(format!(
            "payload has {} bytes, header implies {}",
            body.len(),
            ny * nz
        )));
    }
    let plane = body
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(KspaceError::Format(format!("mask byte {v} is not 0 or 1"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    let mut spec = header.spec;
    spec.ny = ny;
    spec.nz = nz;
    SamplingMask::from_parts(plane, spec)
}

pub fn write_mask(path: &Path, m: &SamplingMask) -> Result<()> {
    let bytes = encode_mask(m)?;
    write_atomic(path, |w| Ok(w.write_all(&bytes)?))
}

pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    decode_mask(&fs::read(path)?)
}
