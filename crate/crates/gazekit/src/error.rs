//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Display geometry is missing where an angular unit was requested.
    #[error("display geometry unavailable: {0}")]
    GeometryUnavailable(String),

    /// A mapped column is missing from the input header.
    #[error("missing column `{0}` in input header")]
    MissingColumn(String),

    /// The input contained no parseable rows.
    #[error("empty recording: {0}")]
    EmptyRecording(String),

    /// Not enough valid data to run the operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A token is not present in the substitution matrix.
    #[error("token `{0}` not present in substitution matrix")]
    UnknownToken(String),

    /// Sequence requirements violated (length mismatch, empty input, ...).
    #[error("sequence error: {0}")]
    Sequence(String),

    /// Malformed config or data file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
