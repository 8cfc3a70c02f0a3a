use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a mathematical or domain precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid parameters or configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed input file.
    #[error("format error: {0}")]
    Format(String),
    /// A stage input lacks a required column or field.
    #[error("schema mismatch: missing column `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
