//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad dimensions, missing files, out-of-range values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data (CSV files, series lengths, splits).
    #[error("data error: {0}")]
    Data(String),

    /// Non-finite values or other numeric failures surfaced during evaluation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Out-of-domain query (e.g. schedule time outside the weld window).
    #[error("domain error: {0}")]
    Domain(String),

    /// Least-squares fit has no unique solution.
    #[error("singular fit: {0}")]
    SingularFit(String),

    /// Finite-difference solver diverged or violated its stability budget.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code per the CLI contract: 2 for config/IO/data problems,
    /// 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Data(_) | Error::Domain(_) | Error::Io(_) => 2,
            Error::Numeric(_) | Error::SingularFit(_) | Error::Solver(_) => 3,
        }
    }
}
