use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: only n = 1 and n = 2 are implemented")]
    Dimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exact arithmetic overflow: {0}")]
    Overflow(String),
    #[error("out of truncation range: {0}")]
    OutOfRange(String),
    #[error("cube is not aligned to the grid: {0}")]
    Alignment(String),
    #[error("map is not grid-compatible: {0}")]
    IncompatibleMap(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("cost budget exceeded: {0}")]
    Budget(String),
    #[error("empty cube family")]
    EmptyFamily,
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
