use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("malformed instance JSON: {0}")]
    Json(String),
    #[error("negative coefficient {value} at ({row}, {col})")]
    NegativeCoefficient { row: usize, col: usize, value: f64 },
    #[error("negative right-hand side {value}")]
    NegativeRhs { value: f64 },
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error("index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("instance has no constraints")]
    NoConstraints,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("trivially infeasible: covering row {row} has no usable variable")]
    TriviallyInfeasible { row: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("budget exhausted after {increments} increments")]
    BudgetExhausted { increments: u64 },
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("nothing to verify: outcome is infeasible")]
    NothingToVerify,
    #[error("solution has {got} coordinates, instance has {expected} variables")]
    WrongLength { got: usize, expected: usize },
    #[error("negative coordinate x[{index}] = {value}")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("covering row {row} violated: (Cx)/c = {ratio}")]
    CoveringViolated { row: usize, ratio: f64 },
    #[error("packing row {row} violated: (Px)/p = {ratio} exceeds {limit}")]
    PackingViolated { row: usize, ratio: f64, limit: f64 },
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PotentialError {
    #[error("empty vector")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for the oracle: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}
