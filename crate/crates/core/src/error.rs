use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("point is not strictly interior: {}", describe_violation(*.constraint, *.slack))]
    NotInterior { constraint: Option<usize>, slack: f64 },

    #[error("point lies on the boundary of the body")]
    BoundaryPoint,

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("density oracle failed: {0}")]
    Oracle(String),

    #[error("rejection oracle infeasible: acceptance rate {acceptance_rate:e} after {trials} proposals")]
    OracleInfeasible { acceptance_rate: f64, trials: u64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("chain left the interior at step {step}: {detail}")]
    InteriorViolation { step: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_violation(constraint: Option<usize>, slack: f64) -> String {
    match constraint {
        Some(i) => format!("constraint {i} has slack {slack:e}"),
        None => format!("smallest eigenvalue of the slack matrix is {slack:e}"),
    }
}
