use thiserror::Error;

/// Errors raised by the planner, the designer and the verification oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid value function: {0}")]
    InvalidValueFunction(String),

    #[error("action index {index} out of range (instance has actions 0..={max})")]
    ActionOutOfRange { index: usize, max: usize },

    #[error("argument {value} outside the domain of {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("non-finite function value at x = {x}")]
    NonFinite { x: f64 },

    #[error("equation has no solution: {0}")]
    NoSolution(String),

    #[error("profile ({x}, {y}) is not implementable through action {action}")]
    NotImplementable { action: usize, x: f64, y: f64 },

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid requires {evaluations} evaluations, cap is {cap}")]
    GridTooLarge { evaluations: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
