//! Iterative phase-aware compressed-sensing reconstructions.
//!
//! Three solvers share one slice-level forward operator `M F` (mask times
//! centered unitary 2D DFT) and one cost layout:
//!
//! * [`recon_magnitude_cs`]: `1/2 |M F(m e^{i phi}) - y|^2 + l1 |W m|_1` with `phi` fixed.
//! * [`recon_cspr`]: adds `l2 sum psi(|[C e^{i phi}]_k|)` and alternates m- and phi-steps.
//! * [`recon_cspc`]: adds `l2 / |P| sum_p |W(phi + p)|_1` and takes joint proximal
//!   gradient steps, cycling through the phase shifts `P`.
//!
//! `|W x|_1` sums the detail subbands of the orthonormal wavelet transform;
//! the coarse approximation block is not penalized. Each outer iteration is
//! accepted only if it does not increase the total cost (the step is halved
//! otherwise), so recorded cost histories are non-increasing.
//!
//! Volumes are reconstructed slice by slice along the fully sampled readout,
//! see [`volume`].

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cspc;
pub mod cspr;
pub mod error;
pub mod magnitude;
pub mod problem;
pub mod shifts;
pub mod trace;
pub mod volume;

pub use config::SolverConfig;
pub use cspc::recon_cspc;
pub use cspr::recon_cspr;
pub use error::SolverError;
pub use magnitude::{lowres_phase, recon_magnitude_cs, MagnitudeOutput};
pub use problem::{CostTerms, PhaseAwareOutput};
pub use shifts::{gen_phase_shifts, PhaseShiftSet};
pub use volume::{recon_volume, Method, VolumeRecon};

pub type Result<T> = std::result::Result<T, SolverError>;
