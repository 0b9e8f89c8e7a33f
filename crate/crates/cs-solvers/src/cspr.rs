//! Alternating magnitude/phase reconstruction with a periodic phase penalty.

use kspace_core::{ComplexSlice, SamplingMask, C64};
use sparse_transforms::prox::psi_abs;
use sparse_transforms::{finite_diff, finite_diff_adj, DiffOperator};

use crate::config::SolverConfig;
use crate::problem::{fold_polar, small_change, CostTerms, DetailL1, PhaseAwareOutput, Problem};
use crate::Result;

/// `sum_k psi(|[C e^{i phi}]_k|)` and its gradient with respect to `phi`.
///
/// The gradient is `Im(C^H (w . d) * conj(z))` with `z = e^{i phi}`,
/// `d = C z` and `w` the half-quadratic weights of `psi` at `d`.
pub(crate) struct PhasePenalty {
    op: DiffOperator,
    shape: [usize; 2],
    delta: f64,
}

impl PhasePenalty {
    pub(crate) fn new(ny: usize, nz: usize, delta: f64) -> Self {
        Self {
            op: DiffOperator::new(&[0, 1]),
            shape: [ny, nz],
            delta,
        }
    }

    fn diffs(&self, z: &[C64]) -> Vec<Vec<C64>> {
        finite_diff(z, &self.shape, &self.op).expect("slice extents")
    }

    pub(crate) fn value(&self, phi: &[f64]) -> f64 {
        let z: Vec<C64> = phi.iter().map(|&a| C64::from_polar(1.0, a)).collect();
        self.diffs(&z)
            .iter()
            .flatten()
            .map(|d| psi_abs(d.norm(), self.delta).value)
            .sum()
    }

    pub(crate) fn gradient(&self, phi: &[f64]) -> Vec<f64> {
        let z: Vec<C64> = phi.iter().map(|&a| C64::from_polar(1.0, a)).collect();
        let mut d = self.diffs(&z);
        for c in d.iter_mut().flatten() {
            *c *= psi_abs(c.norm(), self.delta).weight;
        }
        let a = finite_diff_adj(&d, &self.shape, &self.op).expect("slice extents");
        a.iter().zip(&z).map(|(a, z)| (a * z.conj()).im).collect()
    }
}

pub(crate) fn compose(m: &[f64], phi: &[f64]) -> Vec<C64> {
    m.iter()
        .zip(phi)
        .map(|(&a, &p)| C64::from_polar(a, p))
        .collect()
}

/// Image-domain data gradients with respect to `m` and `phi`.
pub(crate) fn data_gradients(r: &[C64], x: &[C64], phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gm = r
        .iter()
        .zip(phi)
        .map(|(g, &p)| (g * C64::from_polar(1.0, -p)).re)
        .collect();
    let gp = r.iter().zip(x).map(|(g, x)| (g * x.conj()).im).collect();
    (gm, gp)
}

/// Alternating minimization of the periodic-phase cost.
///
/// Each outer iteration runs `inner_iters` proximal-gradient steps on the
/// magnitude (wavelet soft-threshold) followed by `inner_iters` reweighted
/// gradient steps on the phase, starting from the zero-fill image.
pub fn recon_cspr(
    y: &ComplexSlice,
    mask: &SamplingMask,
    cfg: &SolverConfig,
) -> Result<PhaseAwareOutput> {
    cfg.validate()?;
    let p = Problem::new(y, mask)?;
    let w = DetailL1::new(cfg.wavelet, p.ny, p.nz)?;
    let pen = PhasePenalty::new(p.ny, p.nz, cfg.delta);
    let cost = |m: &[f64], phi: &[f64], d: f64| {
        CostTerms::new(d, cfg.lambda1 * w.value(m), cfg.lambda2 * pen.value(phi))
    };

    let zf = p.zero_fill();
    let mut m: Vec<f64> = zf.iter().map(|c| c.norm()).collect();
    let mut phi: Vec<f64> = zf.iter().map(|c| c.arg()).collect();
    let lip = p.lipschitz();
    let mmax = m.iter().cloned().fold(0.0, f64::max);
    let step_m0 = cfg.step_scale / lip;
    let step_p0 = cfg.step_scale / (lip * mmax * mmax + 8.0 * cfg.lambda2).max(f64::MIN_POSITIVE);

    let mut cur = cost(&m, &phi, p.data_term(&compose(&m, &phi)));
    let mut history = vec![cur];
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        let (mut sm, mut sp) = (step_m0, step_p0);
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let (tm, tp) = outer_step(&p, &w, &pen, cfg, &m, &phi, sm, sp);
            let c = cost(&tm, &tp, p.data_term(&compose(&tm, &tp)));
            if c.total <= cur.total {
                accepted = Some((tm, tp, c));
                break;
            }
            sm *= 0.5;
            sp *= 0.5;
        }
        let prev = cur.total;
        if let Some((tm, tp, c)) = accepted {
            m = tm;
            phi = tp;
            cur = c;
        }
        history.push(cur);
        if small_change(prev, cur.total, cfg.tol) {
            converged = true;
            break;
        }
    }
    fold_polar(&mut m, &mut phi);
    Ok(PhaseAwareOutput {
        shape: [p.ny, p.nz],
        magnitude: m,
        phase: phi,
        history,
        converged,
        global_offset: 0.0,
    })
}

#[allow(clippy::too_many_arguments)]
fn outer_step(
    p: &Problem,
    w: &DetailL1,
    pen: &PhasePenalty,
    cfg: &SolverConfig,
    m: &[f64],
    phi: &[f64],
    sm: f64,
    sp: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut m = m.to_vec();
    let mut phi = phi.to_vec();
    for _ in 0..cfg.inner_iters {
        let x = compose(&m, &phi);
        let (_, r) = p.residual(&x);
        let (gm, _) = data_gradients(&r, &x, &phi);
        let t: Vec<f64> = m.iter().zip(&gm).map(|(a, g)| a - sm * g).collect();
        m = w.prox(&t, cfg.lambda1 * sm);
    }
    for _ in 0..cfg.inner_iters {
        let x = compose(&m, &phi);
        let (_, r) = p.residual(&x);
        let (_, gp) = data_gradients(&r, &x, &phi);
        let gr = if cfg.lambda2 > 0.0 {
            pen.gradient(&phi)
        } else {
            vec![0.0; phi.len()]
        };
        for ((a, g), h) in phi.iter_mut().zip(&gp).zip(&gr) {
            *a -= sp * (g + cfg.lambda2 * h);
        }
    }
    (m, phi)
}
