use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] zopl_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 configuration, 2 numerical failure, 3 validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(zopl_core::Error::Diverged { .. } | zopl_core::Error::NonFinite { .. }) => 2,
            HarnessError::Validation(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
