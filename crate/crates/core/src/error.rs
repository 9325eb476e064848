//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("negative entry {value} in {what} at index {index}")]
    NegativeEntry { what: &'static str, index: usize, value: f64 },

    #[error("{what} sums to {sum}, not 1")]
    NotNormalized { what: &'static str, sum: f64 },

    #[error("cost matrix has non-finite entry at ({row}, {col})")]
    NonFiniteCost { row: usize, col: usize },

    #[error("measures carry unequal mass: sum(a) = {a}, sum(b) = {b}")]
    UnequalMass { a: f64, b: f64 },

    #[error("variate ({row}, {col}) is out of range for a {rows}x{cols} problem")]
    VariateOutOfRange { row: usize, col: usize, rows: usize, cols: usize },

    #[error("variate ({row}, {col}) listed more than once")]
    DuplicateVariate { row: usize, col: usize },

    #[error("constrained variates repeat a row or column index")]
    RepeatedIndices,

    #[error("constraint value c[{index}] = {value} outside [0, {cap}]")]
    CapacityViolated { index: usize, value: f64, cap: f64 },

    #[error("order check failed: {0}")]
    OrderCheckFailed(String),

    #[error("constructed plan misses the marginals by {error} (variate {index} is not saturated)")]
    MarginalsViolated { index: usize, error: f64 },

    #[error("order-cone projection needs at least one constrained variate")]
    EmptyConstraints,

    #[error("no zero of the threshold equation on [0, inf): {0}")]
    NoZero(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Gibbs kernel underflow (epsilon = {epsilon}); increase epsilon")]
    NumericalUnderflow { epsilon: f64 },

    #[error("packing is infeasible: capacity {capacity} x {items} items < budget {budget}")]
    Infeasible { capacity: f64, items: usize, budget: f64 },

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("problem too large for the dense oracle: {rows}x{cols} (limit {limit})")]
    TooLarge { rows: usize, cols: usize, limit: usize },

    #[error("iteration limit {0} reached before convergence")]
    MaxIterations(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
