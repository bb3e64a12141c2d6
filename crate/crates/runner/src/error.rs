use std::path::Path;

use thiserror::Error;

pub type RunnerResult<T> = Result<T, RunnerError>;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] ethlab_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed results: {0}")]
    Results(String),
}

impl RunnerError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunnerError::Io { path: path.display().to_string(), source }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) => 2,
            RunnerError::Numeric(_) => 3,
            RunnerError::Io { .. } | RunnerError::Results(_) => 4,
        }
    }
}
