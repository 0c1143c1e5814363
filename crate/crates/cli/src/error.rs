use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("model validation failed with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),

    #[error(transparent)]
    Library(#[from] spinchain::Error),

    #[error("{0}")]
    Usage(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 on validation failure, 3 when a brute-force cap is exceeded, 1
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Library(spinchain::Error::CapExceeded { .. }) => 3,
            _ => 1,
        }
    }
}
