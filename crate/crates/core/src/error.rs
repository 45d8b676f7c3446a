use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model or configuration invariant is violated.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// Configuration text could not be parsed.
    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("solver error: {0}")]
    Solver(String),
    /// Verification inputs are inconsistent (wrong model/grid pairing, etc.).
    #[error("verification error: {0}")]
    Verification(String),
    /// I/O failure while writing outputs.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
