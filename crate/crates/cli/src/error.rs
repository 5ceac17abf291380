use std::process::ExitCode;

use thiserror::Error;

/// Failures mapped onto the stable exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or arguments: exit 1.
    #[error("{0}")]
    Usage(String),
    /// Input or configuration that does not validate: exit 2.
    #[error("{0}")]
    Validation(String),
    /// Model gateway or other runtime failure: exit 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        })
    }

    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}
