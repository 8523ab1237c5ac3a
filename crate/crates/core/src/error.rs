//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A subset cardinality exceeds the number of available features.
    #[error("invalid cardinality: subset size {size} exceeds feature count {p}")]
    CardinalityExceedsDimension { size: usize, p: usize },

    /// Every pair of feature sets had a zero denominator.
    #[error("undefined stability: all pairs are degenerate")]
    UndefinedStability,

    /// A feature index is outside the valid range `[0, p)`.
    #[error("feature index {index} out of range for {p} features")]
    IndexOutOfRange { index: usize, p: usize },

    /// The weighted least-squares system stayed singular after ridge.
    #[error("degenerate design: weighted system is singular after ridge")]
    DegenerateDesign,

    /// The requested support size cannot be fitted on this data.
    #[error("support too large: k = {k} exceeds min(p, n - 2) = {max}")]
    SupportTooLarge { k: usize, max: usize },

    /// Exhaustive subset enumeration would exceed the configured budget.
    #[error("combinatorial budget exceeded: {combos} supports to enumerate (limit {limit})")]
    CombinatorialBudget { combos: u128, limit: u128 },

    /// Covariance parameters do not yield a positive definite matrix.
    #[error("covariance matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A parameter fails its documented range or consistency constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Malformed input data (matrix shape, labels, non-finite values).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// The L0 solver failed on one cross-validation fold.
    #[error("solver failed for k = {k} on fold {fold}: {source}")]
    FoldSolver {
        k: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
