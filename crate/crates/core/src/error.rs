use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("diagonal coefficient {value:e} at t = {t} is below the admissible floor {floor:e}")]
    DiagonalBreach { t: f64, value: f64, floor: f64 },

    #[error("non-finite value in {context} at t = {t}")]
    NonFinite { context: &'static str, t: f64 },

    #[error("instability detected at step {step} (t = {t}): norm {norm:e} exceeds {limit:e}")]
    Unstable {
        step: usize,
        t: f64,
        norm: f64,
        limit: f64,
    },

    #[error("linear solve broke down at row {row}")]
    SolveBreakdown { row: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
