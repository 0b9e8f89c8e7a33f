//! File helpers on top of the `.cvol` and `.mask` containers.
//!
//! Real volumes are stored as `.cvol` with a zero imaginary part and a units
//! tag; boolean volumes use the units tag `"mask"` and values 0 or 1.

use std::path::Path;

use kspace_core::io::{read_cvol, write_cvol};
use kspace_core::{ComplexVolume, Domain, RealVolume};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub const MASK_UNITS: &str = "mask";

pub fn write_real(path: &Path, v: &RealVolume, units: &str) -> Result<(), CliError> {
    Ok(write_cvol(path, &v.to_complex(Domain::Image), Some(units))?)
}

/// Reads the real part of a volume together with its units tag.
pub fn read_real(path: &Path) -> Result<(RealVolume, Option<String>), CliError> {
    let (v, units) = read_cvol(path).map_err(|e| with_path(e.into(), path))?;
    Ok((v.real(), units))
}

pub fn read_complex(path: &Path) -> Result<(ComplexVolume, Option<String>), CliError> {
    read_cvol(path).map_err(|e| with_path(e.into(), path))
}

pub fn write_complex(path: &Path, v: &ComplexVolume, units: Option<&str>) -> Result<(), CliError> {
    Ok(write_cvol(path, v, units)?)
}

pub fn write_bool(path: &Path, shape: [usize; 3], m: &[bool]) -> Result<(), CliError> {
    let v = RealVolume::new(
        shape,
        m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    )?;
    write_real(path, &v, MASK_UNITS)
}

/// Reads a boolean volume; any nonzero value counts as set.
pub fn read_bool(path: &Path) -> Result<([usize; 3], Vec<bool>), CliError> {
    let (v, _) = read_real(path)?;
    Ok((v.shape(), v.data().iter().map(|&x| x != 0.0).collect()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    crate::report::write_bytes(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::format(format!("{}: {e}", path.display())))
}

/// Rounds every sample to single precision, as stored on disk.
pub fn as_stored(v: &ComplexVolume) -> Result<ComplexVolume, CliError> {
    let data = v
        .data()
        .iter()
        .map(|c| kspace_core::C64::new(c.re as f32 as f64, c.im as f32 as f64))
        .collect();
    Ok(ComplexVolume::new(v.shape(), data, v.domain())?)
}

fn with_path(e: CliError, path: &Path) -> CliError {
    CliError::new(e.category, format!("{}: {}", path.display(), e.message))
}
