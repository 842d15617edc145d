use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config, or a solver that does not fit the game.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] sgkit::Error),
}

impl CliError {
    /// 2 for anything the user can fix in their inputs, 3 when a solver
    /// gave up on a well-formed problem.
    pub fn exit_code(&self) -> ExitCode {
        use sgkit::Error as E;
        match self {
            CliError::Lib(E::Backend(_) | E::SolverFailure(_) | E::SizeCap(_)) => ExitCode::from(3),
            _ => ExitCode::from(2),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(e.into())
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
