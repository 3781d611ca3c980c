use thiserror::Error;

/// Errors raised by the no-effect test and its supporting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time grid is invalid: {0}")]
    InvalidGrid(String),

    #[error("curves are not sampled on the same time grid")]
    GridMismatch,

    #[error("curve length {found} does not match grid length {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("response and covariate samples have different sizes ({responses} vs {covariates})")]
    RowCountMismatch { responses: usize, covariates: usize },

    #[error("need at least {required} curves, got {found}")]
    TooFewCurves { required: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("number of basis components p={p} exceeds the maximum {max}")]
    TooManyComponents { p: usize, max: usize },

    #[error("variance estimate is zero (all kernel-weighted pairs vanish) at h={bandwidth}")]
    DegenerateVariance { bandwidth: f64 },

    #[error("wild bootstrap failed: {aborts} aborted replicates exceed the budget of {budget}")]
    BootstrapFailed { aborts: usize, budget: usize },

    #[error(
        "{failures} of {reps} Monte Carlo replications failed (limit 1%); first error: {first}"
    )]
    SimulationFailed {
        failures: usize,
        reps: usize,
        first: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed curve file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
