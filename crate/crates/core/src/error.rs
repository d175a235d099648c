use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A ratio statistic whose denominator count or sum is zero.
    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    /// Malformed input data; `lines` are 1-based line numbers of the input.
    #[error("load error: {message} (lines {lines:?})")]
    Load { message: String, lines: Vec<usize> },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
