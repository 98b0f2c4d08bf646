use std::io;

use thiserror::Error;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] gbsm_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A computed row broke an inequality the theory guarantees.
    #[error("{theorem} violated for trial seed {seed}: {detail}")]
    Violation {
        theorem: &'static str,
        seed: u64,
        detail: String,
    },
}

impl AppError {
    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for inequality violations, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Violation { .. } => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Format(e.to_string())
    }
}
