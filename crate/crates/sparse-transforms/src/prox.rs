//! Proximal map of the l1 norm and the edge-preserving potential.

use num_complex::Complex64;

use crate::{Result, TransformError};

/// Complex soft-thresholding `x * max(|x| - t, 0) / |x|`, with `0 -> 0`.
pub fn soft_threshold(x: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if !(t >= 0.0) {
        return Err(TransformError::NegativeThreshold(t));
    }
    Ok(x.iter().map(|&c| shrink_complex(c, t)).collect())
}

/// Real soft-thresholding `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold_real(x: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(TransformError::NegativeThreshold(t));
    }
    Ok(x.iter().map(|&v| shrink(v, t)).collect())
}

#[inline]
pub fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[inline]
pub fn shrink_complex(c: Complex64, t: f64) -> Complex64 {
    let a = c.norm();
    if a > t {
        c * ((a - t) / a)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Value of `psi` and its half-quadratic weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    /// `1 / sqrt(1 + |x|^2 / delta^2)`, so that `dpsi/d|x| = |x| * weight`.
    pub weight: f64,
}

/// Edge-preserving potential `psi(x) = delta^2 (sqrt(1 + |x|^2/delta^2) - 1)`.
pub fn edge_psi(x: Complex64, delta: f64) -> Result<PsiValue> {
    if !(delta > 0.0) {
        return Err(TransformError::InvalidDelta(delta));
    }
    Ok(psi_abs(x.norm(), delta))
}

/// [`edge_psi`] on a magnitude, without validation.
#[inline]
pub fn psi_abs(a: f64, delta: f64) -> PsiValue {
    let s = a / delta;
    let root = (1.0 + s * s).sqrt();
    // delta^2 (root - 1) rewritten to avoid cancellation for small |x|
    PsiValue {
        value: a * a / (root + 1.0),
        weight: 1.0 / root,
    }
}
