use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0} oracle check(s) failed")]
    OracleFailed(usize),
    #[error("oracle refused: {0}")]
    OracleRefused(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Validation(_) | CliError::Io(_) => ExitCode::from(1),
            CliError::Infeasible(_) | CliError::OracleFailed(_) | CliError::OracleRefused(_) => {
                ExitCode::from(2)
            }
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
