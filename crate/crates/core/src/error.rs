use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid horizon: the game needs at least one round")]
    InvalidHorizon,

    #[error("invalid multiplier at round {round}: {value} (must be finite and > 0)")]
    InvalidMultiplier { round: usize, value: f64 },

    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid arm set: {0}")]
    InvalidArms(String),

    #[error("invalid configuration for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("out-of-order round: expected {expected}, got {got}")]
    Sequencing { expected: usize, got: usize },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by the environment (files, streams) rather
    /// than by the requested configuration.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Read { .. } | Error::Csv(_))
    }
}
