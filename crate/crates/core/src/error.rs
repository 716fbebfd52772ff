use thiserror::Error;

use crate::rational::ParseRationalError;
use crate::verify::Certificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("enumeration budget exceeded: {requested} items requested, budget is {budget}")]
    Budget { requested: u128, budget: u128 },
    #[error("invalid grid step {0}: expected 1/p for a positive integer p")]
    InvalidDelta(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid b: {0}")]
    InvalidB(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{message}")]
    CertificateFailed {
        message: String,
        certificate: Box<Certificate>,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ParseRationalError> for Error {
    fn from(e: ParseRationalError) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
