use thiserror::Error;

/// Errors produced by the optimizer and its numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^H| = {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("target {target} is not in the indirect set")]
    WrongPartition { target: usize },

    #[error("phase {value} at element {index} is outside [0, pi]")]
    InvalidPhase { index: usize, value: f64 },

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("invalid SPSA schedule: {0}")]
    InvalidSchedule(String),

    #[error("indirect target set is empty")]
    EmptyIndirectSet,

    #[error("SINR threshold of target {target} is unreachable within the power budget{}",
        .iteration.map(|i| format!(" (outer iteration {i})")).unwrap_or_default())]
    Infeasible {
        target: usize,
        iteration: Option<usize>,
    },

    #[error("lambda decreased from {previous} to {current} at outer iteration {iteration}")]
    NonMonotone {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("every trial at power {power} was infeasible")]
    AllInfeasible { power: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
