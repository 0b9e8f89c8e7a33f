use thiserror::Error;

/// Failure category, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Io,
    Format,
    Validation,
    NonConvergence,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Io => "io",
            Self::Format => "format",
            Self::Validation => "validation",
            Self::NonConvergence => "non-convergence",
        }
    }

    /// Exit code; 2 is left to the argument parser.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Io => 3,
            Self::Format => 4,
            Self::Validation => 5,
            Self::NonConvergence => 6,
        }
    }
}

#[derive(Debug, Error)]
#[error("{category}: {message}", category = .category.as_str())]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(Category::Io, message)
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self::new(Category::Format, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(Category::Validation, message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Self::io(e.to_string())
        } else {
            Self::format(e.to_string())
        }
    }
}

impl From<kspace_core::KspaceError> for CliError {
    fn from(e: kspace_core::KspaceError) -> Self {
        use kspace_core::KspaceError as K;
        let category = match &e {
            K::Io(_) => Category::Io,
            K::Format(_) => Category::Format,
            _ => Category::Validation,
        };
        Self::new(category, e.to_string())
    }
}

impl From<cs_solvers::SolverError> for CliError {
    fn from(e: cs_solvers::SolverError) -> Self {
        use cs_solvers::SolverError as S;
        match e {
            S::Kspace(k) => k.into(),
            S::Trace(m) => Self::io(m),
            other => Self::validation(other.to_string()),
        }
    }
}

impl From<qsm_pipeline::QsmError> for CliError {
    fn from(e: qsm_pipeline::QsmError) -> Self {
        match e {
            qsm_pipeline::QsmError::Kspace(k) => k.into(),
            other => Self::validation(other.to_string()),
        }
    }
}

impl From<dcrnet::DcrError> for CliError {
    fn from(e: dcrnet::DcrError) -> Self {
        use dcrnet::DcrError as D;
        match e {
            D::Kspace(k) => k.into(),
            D::Io(e) => e.into(),
            D::Json(_) | D::Csv(_) | D::Format(_) | D::Architecture(_) => {
                Self::format(e.to_string())
            }
            other => Self::validation(other.to_string()),
        }
    }
}

impl From<crate::metrics::MetricError> for CliError {
    fn from(e: crate::metrics::MetricError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<png::EncodingError> for CliError {
    fn from(e: png::EncodingError) -> Self {
        match e {
            png::EncodingError::IoError(e) => e.into(),
            other => Self::format(other.to_string()),
        }
    }
}
