use std::process::ExitCode;

use thiserror::Error;

/// CLI failures, each tied to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or unreadable input: exit 2.
    #[error("{0}")]
    Input(String),
    /// Well-formed values outside an operation's domain: exit 3.
    #[error("{0}")]
    Domain(String),
    /// At least one verification check failed: exit 1.
    #[error("{failed} of {total} checks failed")]
    Verification { failed: usize, total: usize },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Verification { .. } => ExitCode::from(1),
            CliError::Input(_) => ExitCode::from(2),
            CliError::Domain(_) => ExitCode::from(3),
        }
    }
}

impl From<negdep::Error> for CliError {
    fn from(e: negdep::Error) -> Self {
        if e.is_domain() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
