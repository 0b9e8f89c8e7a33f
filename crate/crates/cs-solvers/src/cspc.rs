//! Phase-cycling reconstruction.

use kspace_core::{ComplexSlice, SamplingMask, C64};

use crate::config::SolverConfig;
use crate::cspr::{compose, data_gradients};
use crate::error::SolverError;
use crate::problem::{
    fold_polar, small_change, wrap, CostTerms, DetailL1, PhaseAwareOutput, Problem,
};
use crate::shifts::PhaseShiftSet;
use crate::Result;

/// Joint proximal-gradient reconstruction with cycled phase shifts.
///
/// The global phase `arg(sum zf)` is removed from the data first and added
/// back to the output phase; it is reported as `global_offset`. Each outer
/// iteration takes one gradient step on the data term in `(m, phi)`, applies
/// the wavelet soft-threshold to `m`, and applies it to `phi + p` for the
/// next shift `p` before subtracting `p` again.
pub fn recon_cspc(
    y: &ComplexSlice,
    mask: &SamplingMask,
    cfg: &SolverConfig,
    shifts: &PhaseShiftSet,
) -> Result<PhaseAwareOutput> {
    cfg.validate()?;
    let mut p = Problem::new(y, mask)?;
    if shifts.shape() != [p.ny, p.nz] {
        return Err(SolverError::Shape(format!(
            "shift fields are {:?}, slice is {}x{}",
            shifts.shape(),
            p.ny,
            p.nz
        )));
    }
    let sum: C64 = p.zero_fill().iter().sum();
    let theta = if sum.norm() > 0.0 { sum.arg() } else { 0.0 };
    p.demodulate(theta);

    let w = DetailL1::new(cfg.wavelet, p.ny, p.nz)?;
    let np = shifts.count() as f64;
    let reg_phi = |phi: &[f64]| -> f64 {
        let mut t = phi.to_vec();
        let mut acc = 0.0;
        for s in shifts.shifts() {
            t.iter_mut()
                .zip(phi)
                .zip(s)
                .for_each(|((a, &b), &c)| *a = b + c);
            acc += w.value(&t);
        }
        cfg.lambda2 * acc / np
    };
    let cost =
        |m: &[f64], phi: &[f64], d: f64| CostTerms::new(d, cfg.lambda1 * w.value(m), reg_phi(phi));

    let zf = p.zero_fill();
    let mut m: Vec<f64> = zf.iter().map(|c| c.norm()).collect();
    let mut phi: Vec<f64> = zf.iter().map(|c| c.arg()).collect();
    let lip = p.lipschitz();
    let mmax = m.iter().cloned().fold(0.0, f64::max);
    let step_m0 = cfg.step_scale / lip;
    let step_p0 = cfg.step_scale / (lip * mmax * mmax).max(f64::MIN_POSITIVE);

    let x = compose(&m, &phi);
    let (d0, mut r) = p.residual(&x);
    let mut cur = cost(&m, &phi, d0);
    let mut history = vec![cur];
    let mut converged = false;

    for t in 0..cfg.max_outer {
        let x = compose(&m, &phi);
        let (gm, gp) = data_gradients(&r, &x, &phi);
        let shift = shifts.cycled(t);
        let (mut sm, mut sp) = (step_m0, step_p0);
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let tm: Vec<f64> = m.iter().zip(&gm).map(|(a, g)| a - sm * g).collect();
            let tm = w.prox(&tm, cfg.lambda1 * sm);
            let tp: Vec<f64> = phi
                .iter()
                .zip(&gp)
                .zip(shift)
                .map(|((a, g), s)| a - sp * g + s)
                .collect();
            let mut tp = w.prox(&tp, cfg.lambda2 * sp / np);
            tp.iter_mut().zip(shift).for_each(|(a, s)| *a -= s);
            let (d, rt) = p.residual(&compose(&tm, &tp));
            let c = cost(&tm, &tp, d);
            if c.total <= cur.total {
                accepted = Some((tm, tp, rt, c));
                break;
            }
            sm *= 0.5;
            sp *= 0.5;
        }
        let prev = cur.total;
        if let Some((tm, tp, rt, c)) = accepted {
            m = tm;
            phi = tp;
            r = rt;
            cur = c;
        }
        history.push(cur);
        if small_change(prev, cur.total, cfg.tol) {
            converged = true;
            break;
        }
    }
    phi.iter_mut().for_each(|a| *a += theta);
    fold_polar(&mut m, &mut phi);
    Ok(PhaseAwareOutput {
        shape: [p.ny, p.nz],
        magnitude: m,
        phase: phi,
        history,
        converged,
        global_offset: wrap(theta),
    })
}
