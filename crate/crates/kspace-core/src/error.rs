use thiserror::Error;

/// Errors raised by k-space operations and file formats.
#[derive(Debug, Error)]
pub enum KspaceError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },
    #[error("invalid mask spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("k-space has nonzero samples off the mask (first at index {0})")]
    OffMaskEnergy(usize),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
