use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Kspace(#[from] kspace_core::KspaceError),
    #[error(transparent)]
    Transform(#[from] sparse_transforms::TransformError),
    #[error("trace output failed: {0}")]
    Trace(String),
}
