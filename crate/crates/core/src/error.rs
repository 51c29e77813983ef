use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix size must be at least 1")]
    EmptyMatrix,

    #[error("expected {expected} entries for a {n}x{n} matrix, got {got}")]
    ShapeMismatch { n: usize, expected: usize, got: usize },

    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),

    #[error("entry ({row}, {col}) is {value}; entries must be finite and non-negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("{what} supports n <= {limit}, got n = {n}")]
    SizeExceeded { what: &'static str, n: usize, limit: usize },

    #[error("permanent is zero (pattern has no perfect matching)")]
    ZeroPermanent,

    #[error("entry ({row}, {col}) = {value} is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: f64 },

    #[error("row {0} is empty")]
    ZeroRow(usize),

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix lacks total support; {offending} positive entries lie on no perfect matching")]
    NoTotalSupport { offending: usize },

    #[error("sinkhorn did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("matrix has a zero entry at ({row}, {col}); direct minimization needs strictly positive entries")]
    ZeroEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) = {value} outside the band [{lo}, {hi}]")]
    OutOfBand { row: usize, col: usize, value: f64, lo: f64, hi: f64 },

    #[error("epsilon {epsilon} too large for lambda {lambda}: {reason}")]
    EpsilonTooLarge { epsilon: f64, lambda: f64, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("probability at ({row}, {col}) = {value} outside [0, 1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },

    #[error("no closed-form scaling mean for this environment")]
    Unavailable,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
