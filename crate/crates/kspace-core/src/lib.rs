//! Core k-space types and operators for undersampled complex MRI.
//!
//! Volumes are stored x-fastest (`idx = x + nx * (y + ny * z)`) and the
//! readout direction is x. Sampling masks live in the ky-kz plane and are
//! stored y-fastest (`idx = y + ny * z`), so every x position shares the
//! same mask plane.
//!
//! All Fourier transforms are unitary with the DC sample at index `n / 2`.

pub mod error;
pub mod fft;
pub mod io;
pub mod mask;
pub mod model;
pub mod slices;
pub mod volume;

pub use error::KspaceError;
pub use fft::{centered_dft, dft2_centered};
pub use mask::{pdf_map, realize_mask, MaskSpec, SamplingMask};
pub use model::{adjoint_model, apply_mask, forward_model, zero_fill_recon};
pub use num_complex::Complex64;
pub use slices::{slice_decompose, slice_recompose, stack_x_slices, x_slices};
pub use volume::{ComplexSlice, ComplexVolume, Domain, RealVolume};

/// Convenience alias used across the workspace.
pub type C64 = Complex64;

/// Result alias for this crate.
pub type Result<T> = std::result::Result<T, KspaceError>;
