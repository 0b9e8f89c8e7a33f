//! Undersampled forward model `y = A F (m * exp(i phi))` and its adjoint.

use num_complex::Complex64;

use crate::error::KspaceError;
use crate::mask::SamplingMask;
use crate::volume::{ComplexVolume, Domain, RealVolume};
use crate::Result;

const ALL_AXES: [usize; 3] = [0, 1, 2];

fn check_plane(shape: [usize; 3], mask: &SamplingMask) -> Result<()> {
    if shape[1] != mask.ny() || shape[2] != mask.nz() {
        return Err(KspaceError::Shape(format!(
            "mask plane {}x{} does not match volume ky-kz extents {}x{}",
            mask.ny(),
            mask.nz(),
            shape[1],
            shape[2]
        )));
    }
    Ok(())
}

/// Zeroes every k-space line that `mask` does not acquire.
pub fn apply_mask(y: &mut ComplexVolume, mask: &SamplingMask) -> Result<()> {
    let shape = y.shape();
    check_plane(shape, mask)?;
    let nx = shape[0];
    let plane = mask.plane();
    for (line, chunk) in y.data_mut().chunks_mut(nx).enumerate() {
        if !plane[line] {
            chunk.fill(Complex64::new(0.0, 0.0));
        }
    }
    Ok(())
}

/// Undersampled k-space of the image `m * exp(i phi)`.
///
/// The readout (x) direction is always fully sampled; lines are selected in
/// the ky-kz plane. Unsampled lines are exactly zero.
pub fn forward_model(
    m: &RealVolume,
    phi: &RealVolume,
    mask: &SamplingMask,
) -> Result<ComplexVolume> {
    let img = ComplexVolume::from_polar(m, phi)?;
    check_plane(img.shape(), mask)?;
    let mut y = img.dft_centered(&ALL_AXES)?;
    apply_mask(&mut y, mask)?;
    Ok(y)
}

/// `F^H A^H y`: masks `y` and applies the inverse centered DFT.
pub fn adjoint_model(y: &ComplexVolume, mask: &SamplingMask) -> Result<ComplexVolume> {
    let mut k = y.clone();
    apply_mask(&mut k, mask)?;
    k.idft_centered(&ALL_AXES)
}

/// Zero-filled reconstruction of k-space data that is zero off the mask.
///
/// Returns [`KspaceError::OffMaskEnergy`] if any unsampled line holds a
/// nonzero sample.
pub fn zero_fill_recon(y: &ComplexVolume, mask: &SamplingMask) -> Result<ComplexVolume> {
    let shape = y.shape();
    check_plane(shape, mask)?;
    let nx = shape[0];
    let plane = mask.plane();
    for (line, chunk) in y.data().chunks(nx).enumerate() {
        if !plane[line] {
            if let Some(i) = chunk.iter().position(|c| c.re != 0.0 || c.im != 0.0) {
                return Err(KspaceError::OffMaskEnergy(line * nx + i));
            }
        }
    }
    let mut img = y.idft_centered(&ALL_AXES)?;
    img.set_domain(Domain::Image);
    Ok(img)
}
