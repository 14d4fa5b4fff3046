use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] greed_core::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) if e.is_io() => EXIT_IO,
            _ => EXIT_CONFIG,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
