//! Quantitative susceptibility mapping on synthetic data.
//!
//! * [`phantom`]: piecewise-constant susceptibility phantoms.
//! * [`dipole`] and [`gre`]: unit dipole kernel and the multi-echo GRE forward model.
//! * [`unwrap`], [`fit`]: best-path spatial unwrapping and magnitude-weighted field fitting.
//! * [`resharp`]: spherical-mean-value background removal with Tikhonov regularization.
//! * [`inversion`]: thresholded k-space division and multi-orientation COSMOS.
//!
//! Fields are in rad/s, susceptibility in ppm. All FFT convolutions are periodic.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dipole;
pub mod error;
pub mod fit;
pub mod gre;
pub mod inversion;
pub mod phantom;
pub mod pipeline;
pub mod resharp;
pub mod unwrap;

pub use dipole::dipole_kernel;
pub use error::QsmError;
pub use fit::{align_echoes, fit_field, FieldMap};
pub use gre::{field_ppm, simulate_gre, EchoSeries};
pub use inversion::{cosmos_invert, tkd_invert};
pub use phantom::{
    background_source_phantom, make_phantom, PhantomKind, Primitive, SusceptibilityPhantom,
};
pub use pipeline::{run_chain, ChainConfig, ChainOutput};
pub use resharp::{resharp_remove, smv_kernel};
pub use unwrap::unwrap_phase;

pub type Result<T> = std::result::Result<T, QsmError>;

/// `gamma * B0` at 3 T in rad/s per ppm.
pub const GAMMA_B0_3T: f64 = 2.0 * std::f64::consts::PI * 42.577e6 * 3.0 * 1e-6;
