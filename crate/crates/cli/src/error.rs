use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] risnet::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// An internal consistency check exceeded its tolerance.
    #[error("cross-check failed: {what} = {value:e} exceeds {tolerance:e}")]
    CrossCheck {
        what: String,
        value: f64,
        tolerance: f64,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    /// Process exit status: 2 for failed cross-checks, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CrossCheck { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
