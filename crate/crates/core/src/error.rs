use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    #[error("{what} out of range: {value} not in [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("sensor fault: {0}")]
    Fault(String),

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario `{scenario}` (seed {seed}): {source}")]
    Scenario {
        scenario: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 1 for bad input, 2 for runtime faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Range { .. } | Error::Config(_) => 1,
            Error::Fault(_) | Error::Numerical(_) | Error::Io { .. } => 2,
            Error::Scenario { source, .. } => source.exit_code(),
        }
    }
}
