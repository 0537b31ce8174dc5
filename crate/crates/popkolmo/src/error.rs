use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// Row and column indices in messages are 1-based, matching the patch
/// numbering used in all file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NonSquare { rows: usize, cols: usize },

    #[error("negative off-diagonal entry {value:e} at row {row}, column {col}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },

    #[error("column {col} sums to {sum:e}, which exceeds the allowed magnitude {bound:e}")]
    ColumnSumNonZero { col: usize, sum: f64, bound: f64 },

    #[error("matrix exponential overflow: 1-norm {norm:e} exceeds the squaring budget (2^60 / 2)")]
    Overflow { norm: f64 },

    #[error("matrix exponential entry {value:e} at row {row}, column {col} is below the -1e-12 roundoff floor")]
    NegativeExponentialEntry { row: usize, col: usize, value: f64 },

    #[error("propagator column {col} sums to {sum:.17e}, expected 1 within 1e-10")]
    NonConservativePropagator { col: usize, sum: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("total population is not positive")]
    EmptyPopulation,

    #[error("non-finite state value encountered at step {step}")]
    NonFiniteState { step: usize },

    #[error("trajectory samples do not match: {0}")]
    SampleMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant, used by the CLI
    /// for single-line JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "NonSquare",
            Error::NegativeOffDiagonal { .. } => "NegativeOffDiagonal",
            Error::ColumnSumNonZero { .. } => "ColumnSumNonZero",
            Error::Overflow { .. } => "Overflow",
            Error::NegativeExponentialEntry { .. } => "NegativeExponentialEntry",
            Error::NonConservativePropagator { .. } => "NonConservativePropagator",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::GridMismatch(_) => "GridMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyPopulation => "EmptyPopulation",
            Error::NonFiniteState { .. } => "NonFiniteState",
            Error::SampleMismatch(_) => "SampleMismatch",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
