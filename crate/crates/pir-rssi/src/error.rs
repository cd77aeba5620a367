//! Crate-wide error type.

use std::io;

/// Errors surfaced by the library. Internal contract violations (e.g. mixing
/// field moduli) panic instead; everything a caller can plausibly trigger
/// through inputs or the network lands here.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated a documented precondition; the message names the
    /// violated constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A byte payload could not be decoded; the message names the missing or
    /// malformed field.
    #[error("wire decode: {0}")]
    Wire(String),

    /// The peer answered with an error frame.
    #[error("server error: {0}")]
    Server(String),

    /// Scheme decoding failed (corrupt query or query/config mismatch).
    #[error("decode failure: {0}")]
    Decode(String),

    /// Exact enumeration was aborted because the randomness tree grew past
    /// the configured node budget.
    #[error("instance too large: visited {visited} choice nodes (budget {budget})")]
    BudgetExceeded { visited: u64, budget: u64 },

    /// A brute-force probe was asked to run past its size guard.
    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to:
    /// 2 for usage/parameter errors, 3 for io/network, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::BudgetExceeded { .. } | Error::TooLarge(_) => 2,
            Error::Io(_) | Error::Wire(_) | Error::Server(_) => 3,
            Error::Decode(_) => 1,
        }
    }
}
