use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty vector")]
    EmptyVector,

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("column count m = {m} out of range: must satisfy 1 <= m <= {max} for n = {n}")]
    ShapeOutOfRange { m: usize, n: usize, max: usize },

    #[error(
        "dense materialization needs {entries} entries, above the cap of {cap}; \
         use the iterative (matrix-free) path instead"
    )]
    DenseCapExceeded { entries: usize, cap: usize },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("insufficient trials: {trials} (need at least {min})")]
    InsufficientTrials { trials: usize, min: usize },

    #[error(
        "shift system is numerically rank deficient at order q = {q} \
         (sigma_q / sigma_1 = {ratio:e}); try a smaller q"
    )]
    RankDeficient { q: usize, ratio: f64 },

    #[error("empty signal")]
    EmptySignal,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
