use thiserror::Error;

/// Errors raised by the recovery toolkit.
///
/// Index payloads are 0-based; the CLI converts to 1-based when reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("vector must have at least one nonzero entry")]
    ZeroVector,
    #[error("weight {index} is not strictly positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("tuning parameter must be a finite nonnegative number, got {0}")]
    InvalidLambda(f64),
    #[error("column {column} has norm {norm}, expected unit norm")]
    NotNormalized { column: usize, norm: f64 },
    #[error("reference signal is zero")]
    ZeroTruth,
    #[error("reference function has zero energy on the sample")]
    ZeroFunction,
    #[error("support is empty but a nonzero oracle fraction was requested")]
    EmptySupport,
    #[error("point lies outside the cube [-1, 1]^d")]
    OutOfDomain,
    #[error("sample {0} is not strictly positive")]
    NonPositiveSample(f64),
    #[error("table has no rows for the requested selection")]
    EmptyTable,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
