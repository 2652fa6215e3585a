use thiserror::Error;

/// Errors raised by kernel construction and the analyses built on top of it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected} states, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, outside the renormalization tolerance")]
    RowSum { row: usize, sum: f64 },

    #[error("invalid probability measure: {0}")]
    InvalidMeasure(String),

    #[error("measure vanishes at state {state} (value {value:e})")]
    NonPositive { state: usize, value: f64 },

    #[error("measure is not consistent with the kernel (residual {residual:e})")]
    InconsistentMeasure { residual: f64 },

    #[error("stationary measure is ambiguous: {} recurrent classes {classes:?}", classes.len())]
    AmbiguousStationary { classes: Vec<Vec<usize>> },

    #[error("kernel must be irreducible and aperiodic")]
    NotErgodic,

    #[error("invalid product range: m = {m} > n = {n}")]
    InvalidRange { m: i64, n: i64 },

    #[error("explicit sequence holds {len} kernels, kernel {index} requested")]
    SequenceExhausted { len: usize, index: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration needs {needed} tree nodes but the budget is {budget}; raise the budget or use a sampled mode")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("weight ratio R(w) = {ratio} exceeds b = {b}")]
    WeightRatio { ratio: f64, b: f64 },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
