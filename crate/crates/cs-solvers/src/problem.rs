//! Slice-level data term, shared regularizer helpers and solver outputs.

use kspace_core::{dft2_centered, ComplexSlice, Domain, SamplingMask, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_transforms::prox::shrink;
use sparse_transforms::{wavelet_fwd, wavelet_inv, WaveletSpec};

use crate::error::SolverError;
use crate::Result;

/// One row of a cost history.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTerms {
    pub data_term: f64,
    pub reg_m: f64,
    pub reg_phi: f64,
    pub total: f64,
}

impl CostTerms {
    pub fn new(data_term: f64, reg_m: f64, reg_phi: f64) -> Self {
        Self {
            data_term,
            reg_m,
            reg_phi,
            total: data_term + reg_m + reg_phi,
        }
    }
}

/// Magnitude and phase estimate of one slice plus its cost history.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAwareOutput {
    pub shape: [usize; 2],
    /// Nonnegative magnitude, y-fastest.
    pub magnitude: Vec<f64>,
    /// Phase wrapped to (-pi, pi], y-fastest.
    pub phase: Vec<f64>,
    /// Entry 0 is the initial cost, then one entry per outer iteration.
    pub history: Vec<CostTerms>,
    /// False when `max_outer` was reached before the tolerance.
    pub converged: bool,
    /// Global phase removed before solving and added back to `phase`.
    pub global_offset: f64,
}

impl PhaseAwareOutput {
    pub fn image(&self) -> ComplexSlice {
        let data = self
            .magnitude
            .iter()
            .zip(&self.phase)
            .map(|(&m, &p)| C64::from_polar(m, p))
            .collect();
        ComplexSlice::new(self.shape, data, Domain::Image).expect("finite solver output")
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap(p: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = p - two_pi * (p / two_pi).round();
    if w <= -std::f64::consts::PI {
        w + two_pi
    } else {
        w
    }
}

/// Undersampled 2D k-space `y` together with its mask plane.
pub struct Problem<'a> {
    pub y: Vec<C64>,
    pub plane: &'a [bool],
    pub ny: usize,
    pub nz: usize,
}

impl<'a> Problem<'a> {
    pub fn new(y: &'a ComplexSlice, mask: &'a SamplingMask) -> Result<Self> {
        let [ny, nz] = y.shape();
        if ny != mask.ny() || nz != mask.nz() {
            return Err(SolverError::Shape(format!(
                "slice {ny}x{nz} does not match mask {}x{}",
                mask.ny(),
                mask.nz()
            )));
        }
        Ok(Self {
            y: y.data().to_vec(),
            plane: mask.plane(),
            ny,
            nz,
        })
    }

    /// Multiplies the measured data by `exp(-i theta)`.
    pub fn demodulate(&mut self, theta: f64) {
        let r = C64::from_polar(1.0, -theta);
        self.y.iter_mut().for_each(|v| *v *= r);
    }

    pub fn len(&self) -> usize {
        self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn masked_residual_kspace(&self, x: &[C64]) -> (f64, Vec<C64>) {
        let mut k = x.to_vec();
        dft2_centered(&mut k, self.ny, self.nz, false);
        let mut acc = 0.0;
        for ((kv, &yv), &s) in k.iter_mut().zip(&self.y).zip(self.plane) {
            if s {
                *kv -= yv;
                acc += kv.norm_sqr();
            } else {
                *kv = C64::new(0.0, 0.0);
            }
        }
        (0.5 * acc, k)
    }

    /// `1/2 |M F x - y|^2`.
    pub fn data_term(&self, x: &[C64]) -> f64 {
        self.masked_residual_kspace(x).0
    }

    /// Data term and its image-domain gradient `F^H M^H (M F x - y)`.
    pub fn residual(&self, x: &[C64]) -> (f64, Vec<C64>) {
        let (d, mut k) = self.masked_residual_kspace(x);
        dft2_centered(&mut k, self.ny, self.nz, true);
        (d, k)
    }

    /// Zero-filled image `F^H M^H y`.
    pub fn zero_fill(&self) -> Vec<C64> {
        let mut k: Vec<C64> = self
            .y
            .iter()
            .zip(self.plane)
            .map(|(&v, &s)| if s { v } else { C64::new(0.0, 0.0) })
            .collect();
        dft2_centered(&mut k, self.ny, self.nz, true);
        k
    }

    /// Power-method estimate of the largest eigenvalue of `F^H M^H M F`.
    pub fn lipschitz(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<C64> = (0..self.len())
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut est = 0.0;
        for _ in 0..30 {
            let nv = norm(&v);
            if nv == 0.0 {
                return 1.0;
            }
            v.iter_mut().for_each(|c| *c /= nv);
            dft2_centered(&mut v, self.ny, self.nz, false);
            for (c, &s) in v.iter_mut().zip(self.plane) {
                if !s {
                    *c = C64::new(0.0, 0.0);
                }
            }
            dft2_centered(&mut v, self.ny, self.nz, true);
            let next = norm(&v);
            if (next - est).abs() <= 1e-12 * next {
                est = next;
                break;
            }
            est = next;
        }
        if est > 0.0 {
            est
        } else {
            1.0
        }
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Wavelet penalty and proximal map restricted to the detail subbands.
pub struct DetailL1 {
    spec: WaveletSpec,
    detail: Vec<bool>,
    ny: usize,
    nz: usize,
}

impl DetailL1 {
    pub fn new(spec: WaveletSpec, ny: usize, nz: usize) -> Result<Self> {
        spec.check(ny, nz)?;
        Ok(Self {
            spec,
            detail: spec.detail_mask(ny, nz),
            ny,
            nz,
        })
    }

    /// Sum of absolute detail coefficients of `f`.
    pub fn value(&self, f: &[f64]) -> f64 {
        let c = wavelet_fwd(f, self.ny, self.nz, &self.spec).expect("checked extents");
        c.iter()
            .zip(&self.detail)
            .filter(|(_, &d)| d)
            .map(|(v, _)| v.abs())
            .sum()
    }

    /// `argmin_u 1/2 |u - f|^2 + t |W u|_1` over detail subbands.
    pub fn prox(&self, f: &[f64], t: f64) -> Vec<f64> {
        let mut c = wavelet_fwd(f, self.ny, self.nz, &self.spec).expect("checked extents");
        for (v, &d) in c.iter_mut().zip(&self.detail) {
            if d {
                *v = shrink(*v, t);
            }
        }
        wavelet_inv(&c, self.ny, self.nz, &self.spec).expect("checked extents")
    }
}

/// Relative change test used by every solver.
pub fn small_change(prev: f64, next: f64, tol: f64) -> bool {
    (prev - next).abs() <= tol * prev.abs().max(f64::MIN_POSITIVE)
}

/// Folds negative magnitudes into the phase and wraps it.
pub fn fold_polar(m: &mut [f64], phi: &mut [f64]) {
    for (a, p) in m.iter_mut().zip(phi.iter_mut()) {
        if *a < 0.0 {
            *a = -*a;
            *p += std::f64::consts::PI;
        }
        *p = wrap(*p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap(PI), PI);
        assert!((wrap(-PI) - PI).abs() < 1e-15);
        assert!((wrap(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap(0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn power_method_of_a_projection_is_one() {
        let mask = SamplingMask::full(8, 8).unwrap();
        let y = ComplexSlice::zeros([8, 8], Domain::Kspace).unwrap();
        let p = Problem::new(&y, &mask).unwrap();
        assert!((p.lipschitz() - 1.0).abs() < 1e-12);
    }
}
