use std::path::PathBuf;

use twistpath_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
    #[error(transparent)]
    Numerics(#[from] CoreError),
}

impl CliError {
    pub fn format(what: &'static str, message: impl ToString) -> Self {
        Self::Format {
            what,
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
