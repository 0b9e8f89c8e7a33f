//! Deep complex residual network for undersampled MRI slices.
//!
//! The network maps a zero-filled complex slice `x0` to a reconstruction:
//!
//! ```text
//! y0 = ReLU(BN(W0 * x0 + b0))
//! F  = ReLU(BN(Wa * x + ba)),  A = F + x,  y = ReLU(BN(Wb * A + bb))   (per block)
//! y6 = x0 + W6 * y + b6
//! Y_rec(k) = Y6(k) off the sampling set, (lam X0(k) + Y6(k)) / (1 + lam) on it
//! ```
//!
//! BN and ReLU act on the real and imaginary planes independently. Gradients
//! come from a hand-written reverse pass over a recorded [`Tape`]; everything
//! runs in `f64` so finite-difference checks are meaningful.
//!
//! Tensors are `(N, C, H, W)` with `W` fastest. A k-space slice of extents
//! `(ny, nz)` maps to `H = nz`, `W = ny`, which keeps the y-fastest slice
//! layout unchanged.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adam;
pub mod bn;
pub mod conv;
pub mod dc;
pub mod error;
pub mod model;
pub mod noise;
pub mod tensor;
pub mod train;
pub mod weights;

pub use adam::{Adam, AdamConfig};
pub use bn::ComplexBn;
pub use conv::{complex_conv2d, ComplexConv, Convention};
pub use dc::{blend_kspace, data_consistency, softplus, Consistency};
pub use error::DcrError;
pub use model::{Arch, DcrNetModel, Gradients, Mode, Tape};
pub use noise::add_noise;
pub use tensor::{complex_relu, mse_loss, ComplexTensor};
pub use train::{
    reconstruct_volume, train_toy, write_trace, Dataset, LrStage, TrainConfig, TrainReport,
};
pub use weights::{load_weights, save_weights};

/// Result alias for this crate.
pub type Result<T> = std::result::Result<T, DcrError>;
