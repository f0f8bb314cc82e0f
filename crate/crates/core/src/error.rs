//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data failed validation (ordering, positivity, schema).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// An operation that needs an invertible design matrix was asked to run
    /// on a singular one (fewer points than coefficients, repeated abscissas).
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// Numerical breakdown: non-finite intermediate, failed factorization,
    /// or a resolution limit was hit.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file (CSV/JSON schema or number syntax).
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        // A missing or unreadable file is an I/O failure, not a syntax one.
        let msg = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => Error::Parse(msg),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() { Error::Io(e.into()) } else { Error::Parse(e.to_string()) }
    }
}
