use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors that stop a command. Record-level problems never surface here;
/// they are tallied in the run manifest instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &'static str, message: impl ToString) -> Self {
        Error::Stage {
            stage,
            message: message.to_string(),
        }
    }

    /// Process exit code: 1 for configuration and IO, 2 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Config(_) | Error::Format { .. } => 1,
            Error::Stage { .. } => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
