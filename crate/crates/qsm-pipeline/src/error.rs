use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsmError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("mask is empty: {0}")]
    EmptyMask(&'static str),
    #[error("orientations are degenerate: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Kspace(#[from] kspace_core::KspaceError),
}
