//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or unparseable configuration file.
    #[error("config error: {0}")]
    Config(String),

    /// An operation was called in a way that violates its contract
    /// (wrong node kind, mismatched object ids, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An object or node index outside the scenario's range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// The instance (or a requested allocation) admits no feasible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An accuracy model could not be constructed or evaluated.
    #[error("accuracy model error: {0}")]
    Model(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for infeasible instances, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Infeasible(_) => 3,
            _ => 1,
        }
    }
}
