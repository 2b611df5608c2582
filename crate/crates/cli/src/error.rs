use std::process::ExitCode;

use thiserror::Error;
use trialspace_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{0}")]
    ResourceCap(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Io(_) => ExitCode::from(3),
            CliError::ResourceCap(_) => ExitCode::from(4),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        if err.is_cap() {
            CliError::ResourceCap(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
