use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("property `{property}` could not run: {message}")]
    Property { property: String, message: String },
}

impl CliError {
    /// 2 for unreadable or malformed input, 3 for an invalid model, 1 for a failed property run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::InvalidModel(_) => 3,
            CliError::Property { .. } | CliError::Write { .. } => 1,
        }
    }
}
