//! Sparsifying operators for phase-aware compressed sensing.
//!
//! * [`wavelet`]: orthonormal multilevel Daubechies-4 transform with periodic
//!   boundaries on y-fastest 2D slices.
//! * [`diff`]: forward finite differences with replicate-edge boundaries and
//!   their exact adjoint.
//! * [`prox`]: complex soft-thresholding and the edge-preserving potential
//!   `psi(x) = delta^2 (sqrt(1 + |x|^2/delta^2) - 1)`.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub mod diff;
pub mod prox;
pub mod wavelet;

pub use diff::{finite_diff, finite_diff_adj, DiffOperator};
pub use prox::{edge_psi, soft_threshold, soft_threshold_real, PsiValue};
pub use wavelet::{wavelet_fwd, wavelet_fwd_slice, wavelet_inv, wavelet_inv_slice, WaveletSpec};

/// Sample types the transforms operate on (real or complex).
pub trait Coef:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl Coef for f64 {}
impl Coef for Complex64 {}

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("extent {extent} is not divisible by 2^{levels}")]
    NotDivisible { extent: usize, levels: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },
    #[error("threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error(transparent)]
    Kspace(#[from] kspace_core::KspaceError),
}

pub type Result<T> = std::result::Result<T, TransformError>;
