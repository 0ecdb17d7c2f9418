use thiserror::Error;

/// Errors raised while building plans, computing contracts or running experiments.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested parameters cannot meet the stated guarantee.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// A precondition on an input value was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quantile of an empty sample set")]
    EmptySamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Infeasible(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
