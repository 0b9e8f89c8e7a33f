//! Data-consistency blend in k-space.

use kspace_core::{dft2_centered, C64};

use crate::error::DcrError;
use crate::tensor::ComplexTensor;
use crate::Result;

/// Acquired k-space `X0` of shape `(N, 1, H, W)` and the sampling plane
/// (`H * W`, `W` fastest) shared by every sample.
#[derive(Debug, Clone, Copy)]
pub struct Consistency<'a> {
    pub kspace: &'a ComplexTensor,
    pub mask: &'a [bool],
}

impl Consistency<'_> {
    pub(crate) fn check(&self, dims: [usize; 4]) -> Result<()> {
        if self.kspace.dims != dims {
            return Err(DcrError::Shape(format!(
                "k-space {:?} vs image {:?}",
                self.kspace.dims, dims
            )));
        }
        if self.mask.len() != dims[2] * dims[3] {
            return Err(DcrError::Shape(format!(
                "mask has {} entries for a {}x{} plane",
                self.mask.len(),
                dims[2],
                dims[3]
            )));
        }
        Ok(())
    }
}

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for positive `y`.
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Unitary centered 2D DFT of every `(H, W)` plane.
pub(crate) fn planes_dft(x: &ComplexTensor, inverse: bool) -> Vec<C64> {
    let [_, _, h, w] = x.dims;
    let mut out: Vec<C64> =
        x.re.iter()
            .zip(&x.im)
            .map(|(&a, &b)| C64::new(a, b))
            .collect();
    for plane in out.chunks_mut(h * w) {
        dft2_centered(plane, w, h, inverse);
    }
    out
}

pub(crate) fn from_complex(dims: [usize; 4], v: &[C64]) -> ComplexTensor {
    ComplexTensor {
        dims,
        re: v.iter().map(|c| c.re).collect(),
        im: v.iter().map(|c| c.im).collect(),
    }
}

/// Replaces sampled k-space positions of `y6` by `(lam X0 + Y6) / (1 + lam)`.
pub fn data_consistency(
    y6: &ComplexTensor,
    dc: &Consistency<'_>,
    lambda: f64,
) -> Result<ComplexTensor> {
    dc.check(y6.dims)?;
    Ok(blend(y6, dc, lambda).0)
}

/// The k-space half of [`data_consistency`]: given the spectrum `k6` of the
/// network output, returns the blended spectrum. Unsampled positions are copied.
pub fn blend_kspace(
    k6: &ComplexTensor,
    dc: &Consistency<'_>,
    lambda: f64,
) -> Result<ComplexTensor> {
    dc.check(k6.dims)?;
    let k: Vec<C64> = (0..k6.len()).map(|i| k6.at(i)).collect();
    Ok(from_complex(
        k6.dims,
        &blend_planes(k, dc, lambda, k6.plane()),
    ))
}

fn blend_planes(mut k: Vec<C64>, dc: &Consistency<'_>, lambda: f64, p: usize) -> Vec<C64> {
    for (i, v) in k.iter_mut().enumerate() {
        if dc.mask[i % p] {
            *v = (dc.kspace.at(i) * lambda + *v) / (1.0 + lambda);
        }
    }
    k
}

/// Output image and the k-space of `y6`.
pub(crate) fn blend(
    y6: &ComplexTensor,
    dc: &Consistency<'_>,
    lambda: f64,
) -> (ComplexTensor, Vec<C64>) {
    let k6 = planes_dft(y6, false);
    let p = y6.plane();
    let mut k = blend_planes(k6.clone(), dc, lambda, p);
    for plane in k.chunks_mut(p) {
        dft2_centered(plane, y6.dims[3], y6.dims[2], true);
    }
    (from_complex(y6.dims, &k), k6)
}

/// Gradients w.r.t. `y6` and `lambda`.
pub(crate) fn blend_backward(
    g: &ComplexTensor,
    k6: &[C64],
    dc: &Consistency<'_>,
    lambda: f64,
) -> (ComplexTensor, f64) {
    // adjoint of the inverse unitary DFT is the forward DFT
    let mut gk = planes_dft(g, false);
    let p = g.plane();
    let mut glam = 0.0;
    let s = 1.0 / (1.0 + lambda);
    for (i, v) in gk.iter_mut().enumerate() {
        if dc.mask[i % p] {
            let dk = (dc.kspace.at(i) - k6[i]) * (s * s);
            glam += v.re * dk.re + v.im * dk.im;
            *v *= s;
        }
    }
    for plane in gk.chunks_mut(p) {
        dft2_centered(plane, g.dims[3], g.dims[2], true);
    }
    (from_complex(g.dims, &gk), glam)
}
