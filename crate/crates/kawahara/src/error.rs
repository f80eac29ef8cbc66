//! Error taxonomy shared by the whole crate.
//!
//! The variants map onto the CLI exit categories: parse/configuration
//! problems, validation failures, violated theorem hypotheses,
//! non-convergent iterations and internal solver trouble.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KawaError {
    /// Malformed input file or unknown preset name.
    #[error("parse error: {0}")]
    Parse(String),

    /// A problem definition failed validation (grid sanity, compatibility,
    /// weight class, dimension mismatches, precondition violations).
    #[error("validation error: {0}")]
    Validation(String),

    /// A hypothesis required by the underlying theory does not hold
    /// (for example the lower bound on |g1|).
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    /// An iterative procedure exhausted its budget, or a time integration
    /// blew up.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// Internal numerical failure (singular banded system and friends).
    #[error("solver error: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl KawaError {
    /// Process exit code for the CLI. `0` is reserved for success.
    pub fn exit_code(&self) -> i32 {
        match self {
            KawaError::Parse(_) => 2,
            KawaError::Validation(_) => 3,
            KawaError::Hypothesis(_) => 4,
            KawaError::NonConvergence(_) => 5,
            KawaError::Solver(_) => 1,
            KawaError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, KawaError>;
