//! Weight files: `manifest.json` describing every buffer plus one raw blob.
//!
//! ```text
//! {"arch":"dcrnet","blocks":5,"channels":64,"convention":"printed","blob":"weights.bin",
//!  "tensors":[{"name":..,"shape":[..],"dtype":"f64le","offset":0,"part":"real"},..]}
//! ```
//!
//! Offsets are byte offsets into the blob and tensors are stored with the
//! last axis fastest. Files are written as `f64le` so a save/load round trip
//! is bit-exact; `f32le` blobs are accepted on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conv::Convention;
use crate::error::DcrError;
use crate::model::{Arch, DcrNetModel, Mode, Part};
use crate::Result;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const BLOB_NAME: &str = "weights.bin";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    arch: String,
    blocks: usize,
    channels: usize,
    #[serde(default = "default_convention")]
    convention: String,
    #[serde(default = "default_blob")]
    blob: String,
    tensors: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    offset: u64,
    part: String,
}

fn default_convention() -> String {
    Convention::Printed.as_str().into()
}

fn default_blob() -> String {
    BLOB_NAME.into()
}

/// Writes `manifest.json` and `weights.bin` into `dir`, creating it if needed.
pub fn save_weights(model: &DcrNetModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let layout = DcrNetModel::layout(model.arch);
    let mut tensors = Vec::with_capacity(layout.len());
    let mut blob = Vec::new();
    for (info, buf) in layout.iter().zip(model.buffers()) {
        tensors.push(Entry {
            name: info.name.clone(),
            shape: info.shape.clone(),
            dtype: "f64le".into(),
            offset: blob.len() as u64,
            part: info.part.as_str().into(),
        });
        buf.iter()
            .for_each(|v| blob.extend_from_slice(&v.to_le_bytes()));
    }
    let manifest = Manifest {
        arch: "dcrnet".into(),
        blocks: model.arch.blocks,
        channels: model.arch.channels,
        convention: model.convention().as_str().into(),
        blob: BLOB_NAME.into(),
        tensors,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    kspace_core::io::write_atomic(&dir.join(BLOB_NAME), |w| Ok(w.write_all(&blob)?))?;
    kspace_core::io::write_atomic(&dir.join(MANIFEST_NAME), |w| Ok(w.write_all(&json)?))?;
    Ok(())
}

/// Reads a model written by [`save_weights`]; the result is in eval mode.
pub fn load_weights(dir: &Path) -> Result<DcrNetModel> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?;
    if manifest.arch != "dcrnet" {
        return Err(DcrError::Architecture(format!(
            "unknown arch {:?}",
            manifest.arch
        )));
    }
    let arch = Arch {
        channels: manifest.channels,
        blocks: manifest.blocks,
    };
    let convention = Convention::parse(&manifest.convention)
        .ok_or_else(|| DcrError::Format(format!("unknown convention {:?}", manifest.convention)))?;
    let layout = DcrNetModel::layout(arch);
    if layout.len() != manifest.tensors.len() {
        return Err(DcrError::Architecture(format!(
            "{} blocks of {} channels need {} tensors, manifest lists {}",
            arch.blocks,
            arch.channels,
            layout.len(),
            manifest.tensors.len()
        )));
    }
    if Path::new(&manifest.blob).components().count() != 1 {
        return Err(DcrError::Format(format!(
            "blob name {:?} must be a plain file name",
            manifest.blob
        )));
    }
    let blob = fs::read(dir.join(&manifest.blob))?;
    let mut model = DcrNetModel::new(arch, 0.0, 0)?;
    model.set_convention(convention);
    for ((info, entry), buf) in layout
        .iter()
        .zip(&manifest.tensors)
        .zip(model.buffers_mut())
    {
        let part = match entry.part.as_str() {
            "real" => Part::Real,
            "imag" => Part::Imag,
            p => {
                return Err(DcrError::Format(format!(
                    "{}: unknown part {p:?}",
                    entry.name
                )))
            }
        };
        if entry.name != info.name || entry.shape != info.shape || part != info.part {
            return Err(DcrError::Architecture(format!(
                "expected {} {:?} ({}), found {} {:?} ({})",
                info.name,
                info.shape,
                info.part.as_str(),
                entry.name,
                entry.shape,
                entry.part
            )));
        }
        let width = match entry.dtype.as_str() {
            "f64le" => 8,
            "f32le" => 4,
            d => {
                return Err(DcrError::Format(format!(
                    "{}: unsupported dtype {d:?}",
                    entry.name
                )))
            }
        };
        let start = usize::try_from(entry.offset)
            .map_err(|_| DcrError::Format("offset overflow".into()))?;
        let end = start
            .checked_add(width * buf.len())
            .filter(|&e| e <= blob.len())
            .ok_or_else(|| {
                DcrError::Format(format!(
                    "{}: blob truncated ({} bytes)",
                    entry.name,
                    blob.len()
                ))
            })?;
        for (v, bytes) in buf.iter_mut().zip(blob[start..end].chunks_exact(width)) {
            *v = if width == 8 {
                f64::from_le_bytes(bytes.try_into().expect("8-byte chunk"))
            } else {
                f32::from_le_bytes(bytes.try_into().expect("4-byte chunk")) as f64
            };
            if !v.is_finite() {
                return Err(DcrError::Format(format!(
                    "{}: non-finite value",
                    entry.name
                )));
            }
        }
    }
    if model
        .blocks
        .iter()
        .flat_map(|b| [&b.bn_a, &b.bn_b])
        .chain([&model.input_bn])
        .any(|bn| bn.var_re.iter().chain(&bn.var_im).any(|&v| !(v > 0.0)))
    {
        return Err(DcrError::Format("running variance must be positive".into()));
    }
    model.mode = Mode::Eval;
    Ok(model)
}
