//! Magnitude-only compressed sensing with a fixed low-resolution phase.

use kspace_core::{dft2_centered, ComplexSlice, SamplingMask, C64};

use crate::config::SolverConfig;
use crate::problem::{small_change, CostTerms, DetailL1, Problem};
use crate::Result;

/// Magnitude estimate with the phase it was solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeOutput {
    pub shape: [usize; 2],
    /// Nonnegative magnitude, y-fastest.
    pub magnitude: Vec<f64>,
    /// The fixed phase passed in.
    pub phase: Vec<f64>,
    pub history: Vec<CostTerms>,
    pub converged: bool,
}

impl MagnitudeOutput {
    pub fn image(&self) -> ComplexSlice {
        let data = self
            .magnitude
            .iter()
            .zip(&self.phase)
            .map(|(&m, &p)| C64::from_polar(m, p))
            .collect();
        ComplexSlice::new(self.shape, data, kspace_core::Domain::Image)
            .expect("finite solver output")
    }
}

/// Phase of the Hann-apodized calibration block.
///
/// Uses the whole plane when the mask has no calibration block.
pub fn lowres_phase(y: &ComplexSlice, mask: &SamplingMask) -> Result<Vec<f64>> {
    let p = Problem::new(y, mask)?;
    let (ny, nz) = (p.ny, p.nz);
    let spec = mask.spec();
    let [hy, hz] = if spec.calib_count() > 0 {
        spec.calib
    } else {
        [ny.div_ceil(2), nz.div_ceil(2)]
    };
    let (cy, cz) = (ny / 2, nz / 2);
    let hann = |i: usize, c: usize, h: usize| -> f64 {
        // offset within the 2h-wide block
        let j = i as f64 - (c as f64 - h as f64);
        if j < 0.0 || j >= 2.0 * h as f64 {
            0.0
        } else {
            (std::f64::consts::PI * (j + 0.5) / (2 * h) as f64)
                .sin()
                .powi(2)
        }
    };
    let mut k = vec![C64::new(0.0, 0.0); ny * nz];
    for iz in 0..nz {
        let wz = hann(iz, cz, hz);
        for iy in 0..ny {
            let i = iy + ny * iz;
            if p.plane[i] {
                k[i] = p.y[i] * (hann(iy, cy, hy) * wz);
            }
        }
    }
    dft2_centered(&mut k, ny, nz, true);
    Ok(k.iter().map(|c| c.arg()).collect())
}

/// Proximal-gradient magnitude reconstruction with `phi` held fixed.
///
/// Minimizes `1/2 |M F(m e^{i phi}) - y|^2 + lambda1 |W m|_1` starting from
/// the projection of the zero-fill image onto `e^{i phi}`. The returned
/// magnitude is clamped to be nonnegative.
pub fn recon_magnitude_cs(
    y: &ComplexSlice,
    mask: &SamplingMask,
    phi: &[f64],
    cfg: &SolverConfig,
) -> Result<MagnitudeOutput> {
    cfg.validate()?;
    let p = Problem::new(y, mask)?;
    if phi.len() != p.len() {
        return Err(crate::SolverError::Shape(format!(
            "phase has {} samples, slice has {}",
            phi.len(),
            p.len()
        )));
    }
    let w = DetailL1::new(cfg.wavelet, p.ny, p.nz)?;
    let rot: Vec<C64> = phi.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    let compose = |m: &[f64]| -> Vec<C64> { m.iter().zip(&rot).map(|(&a, &r)| r * a).collect() };
    let cost = |m: &[f64], d: f64| CostTerms::new(d, cfg.lambda1 * w.value(m), 0.0);

    let zf = p.zero_fill();
    let mut m: Vec<f64> = zf
        .iter()
        .zip(&rot)
        .map(|(z, r)| (z * r.conj()).re)
        .collect();
    let step0 = cfg.step_scale / p.lipschitz();
    let (d0, mut r) = p.residual(&compose(&m));
    let mut cur = cost(&m, d0);
    let mut history = vec![cur];
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        let grad: Vec<f64> = r.iter().zip(&rot).map(|(g, q)| (g * q.conj()).re).collect();
        let mut step = step0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let trial: Vec<f64> = m.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let trial = w.prox(&trial, cfg.lambda1 * step);
            let (d, rt) = p.residual(&compose(&trial));
            let c = cost(&trial, d);
            if c.total <= cur.total {
                accepted = Some((trial, rt, c));
                break;
            }
            step *= 0.5;
        }
        let prev = cur.total;
        if let Some((trial, rt, c)) = accepted {
            m = trial;
            r = rt;
            cur = c;
        }
        history.push(cur);
        if small_change(prev, cur.total, cfg.tol) {
            converged = true;
            break;
        }
    }
    m.iter_mut().for_each(|a| *a = a.max(0.0));
    Ok(MagnitudeOutput {
        shape: [p.ny, p.nz],
        magnitude: m,
        phase: phi.to_vec(),
        history,
        converged,
    })
}
