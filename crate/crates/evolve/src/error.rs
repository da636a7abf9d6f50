use thiserror::Error;

use crate::linalg::CVec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical rank: {0}")]
    NumericalRank(String),

    #[error("not an inner product: positivity fails along the witness direction")]
    NotInnerProduct { witness: CVec, value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("singular step matrix (condition estimate {cond:.3e})")]
    StepSingular { cond: f64 },

    #[error("ill-conditioned: {0}")]
    Conditioning(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("inputs differ at t = {t} before the causality cut")]
    InputsDiffer { t: f64 },
}
