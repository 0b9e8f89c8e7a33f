//! Conversion between 3D volumes and per-readout-position 2D slices.

use num_complex::Complex64;

use crate::error::KspaceError;
use crate::volume::{ComplexSlice, ComplexVolume, Domain};
use crate::Result;

/// Splits 3D k-space into one ky-kz k-space slice per x position.
///
/// Applies a 1D inverse DFT along the fully sampled readout first, so each
/// returned slice is the 2D k-space of one image-domain x position.
pub fn slice_decompose(y: &ComplexVolume) -> Result<Vec<ComplexSlice>> {
    let hybrid = y.idft_centered(&[0])?;
    let mut slices = x_slices(&hybrid)?;
    for s in &mut slices {
        s.set_domain(Domain::Kspace);
    }
    Ok(slices)
}

/// Inverse of [`slice_decompose`].
pub fn slice_recompose(slices: &[ComplexSlice]) -> Result<ComplexVolume> {
    let hybrid = stack_x_slices(slices, Domain::Kspace)?;
    hybrid.dft_centered(&[0])
}

/// Extracts the y-z slice at every x position without any transform.
pub fn x_slices(v: &ComplexVolume) -> Result<Vec<ComplexSlice>> {
    let [nx, ny, nz] = v.shape();
    let data = v.data();
    (0..nx)
        .map(|x| {
            let s: Vec<Complex64> = (0..ny * nz).map(|l| data[x + nx * l]).collect();
            ComplexSlice::new([ny, nz], s, v.domain())
        })
        .collect()
}

/// Stacks equally shaped y-z slices along x.
pub fn stack_x_slices(slices: &[ComplexSlice], domain: Domain) -> Result<ComplexVolume> {
    let first = slices
        .first()
        .ok_or_else(|| KspaceError::Shape("no slices".into()))?;
    let [ny, nz] = first.shape();
    let nx = slices.len();
    let mut data = vec![Complex64::new(0.0, 0.0); nx * ny * nz];
    for (x, s) in slices.iter().enumerate() {
        if s.shape() != [ny, nz] {
            return Err(KspaceError::Shape(format!(
                "slice {x} has shape {:?}, expected {:?}",
                s.shape(),
                [ny, nz]
            )));
        }
        for (l, &c) in s.data().iter().enumerate() {
            data[x + nx * l] = c;
        }
    }
    ComplexVolume::new([nx, ny, nz], data, domain)
}
