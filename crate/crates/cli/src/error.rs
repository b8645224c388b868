use std::io;

use debond::DebondError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] DebondError),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(DebondError::NoConvergence { .. } | DebondError::WindowUnderflow { .. }) => 3,
            CliError::Verification(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let stall = DebondError::NoConvergence {
            iterations: 3,
            last_change: 1.0,
            factor: 0.9,
        };
        assert_eq!(CliError::from(stall).exit_code(), 3);
        assert_eq!(CliError::from(DebondError::WindowUnderflow { factors: vec![] }).exit_code(), 3);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 4);
        assert_eq!(CliError::from(DebondError::InvalidData("x".into())).exit_code(), 1);
    }
}
