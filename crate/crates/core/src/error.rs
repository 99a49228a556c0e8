use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular (zero pivot at index {0})")]
    SingularMatrix(usize),
    #[error("matrix is not symmetric (largest asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("row {0} is identically zero")]
    ZeroRow(usize),
    #[error("matrix is numerically rank deficient (pivot {0})")]
    RankDeficient(usize),
    #[error("{what} did not converge within {limit} iterations")]
    NoConvergence { what: &'static str, limit: usize },
    #[error("lower-precision stage failed: {0}")]
    LowPrecisionFailure(String),
    #[error("invalid XLATM1 mode {0} (expected 1..=5)")]
    BadMode(u8),
    #[error("invalid matrix id {0} (expected 1..=16)")]
    BadMatrixId(u8),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference value at index {0} is zero")]
    ZeroReference(usize),
    #[error("matrix contains a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("malformed matrix data: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
