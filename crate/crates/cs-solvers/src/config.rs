//! Solver parameters.

use sparse_transforms::WaveletSpec;

use crate::error::SolverError;
use crate::Result;

/// Regularization weights, step control and iteration budget.
///
/// Defaults assume images normalized to a maximum magnitude of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the magnitude wavelet term.
    pub lambda1: f64,
    /// Weight of the phase term.
    pub lambda2: f64,
    /// Edge-preserving potential parameter.
    pub delta: f64,
    pub max_outer: usize,
    /// Sub-iterations of each m-step and phi-step in the alternating solver.
    pub inner_iters: usize,
    /// Relative cost change below which iterations stop.
    pub tol: f64,
    /// Fraction of `1 / L` used as the nominal step.
    pub step_scale: f64,
    /// Step halvings tried before an iteration is rejected.
    pub max_backtracks: usize,
    pub wavelet: WaveletSpec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 1e-3,
            lambda2: 1e-3,
            delta: 0.005,
            max_outer: 100,
            inner_iters: 1,
            tol: 1e-5,
            step_scale: 0.9,
            max_backtracks: 20,
            wavelet: WaveletSpec::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SolverError::Config(m.to_owned()));
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return bad("lambda1 and lambda2 must be nonnegative");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if self.max_outer == 0 || self.inner_iters == 0 {
            return bad("iteration counts must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return bad("step_scale must lie in (0, 1]");
        }
        Ok(())
    }
}
