use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("formula is unsatisfiable")]
    Unsat,
    #[error("weighted model count is zero")]
    ZeroWmc,
    #[error("{what} budget exceeded")]
    BudgetExceeded { what: &'static str },
    #[error("formula has {n} variables, over the limit of {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("formula has more than {limit} models")]
    TooManyModels { limit: usize },
    #[error("gradient contains a non-finite entry")]
    NonFiniteGradient,
}

pub type Result<T> = std::result::Result<T, Error>;
