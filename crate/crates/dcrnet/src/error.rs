use thiserror::Error;

/// Errors raised by the network, training and weight files.
#[derive(Debug, Error)]
pub enum DcrError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("expected {expected} input channels, got {got}")]
    Channels { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("weights format error: {0}")]
    Format(String),
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kspace(#[from] kspace_core::KspaceError),
}
