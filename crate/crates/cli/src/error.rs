//! Harness error type with the scriptable exit-code contract:
//! 0 pass, 2 config error, 3 gate rejection, 4 numerical-certificate failure,
//! 5 verification failure.

use kpzfp_core::KpzError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Kpz(#[from] KpzError),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Kpz(KpzError::GateRejected(_)) | CliError::Kpz(KpzError::UndecidableTail) => {
                3
            }
            CliError::Kpz(_) => 4,
            CliError::Verify(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
