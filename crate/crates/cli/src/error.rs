use std::path::{Path, PathBuf};

use schemaforge_core::gateway::GatewayError;
use schemaforge_core::session::{PromptError, SessionError};

pub const EXIT_INVALID: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_GATEWAY: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    /// Already reported; only the exit code is left.
    #[error("")]
    Exit(u8),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Exit(code) => *code,
            CliError::Gateway(_) => EXIT_GATEWAY,
            _ => EXIT_USAGE,
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Gateway(g) => CliError::Gateway(g),
            other => CliError::Invalid(other.to_string()),
        }
    }
}
