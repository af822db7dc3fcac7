use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { what: String, asymmetry: f64 },

    #[error("{what}: not positive definite (lambda_min = {lambda_min:.3e})")]
    NotPositiveDefinite { what: String, lambda_min: f64 },

    #[error("{what}: not positive semidefinite (lambda_min = {lambda_min:.3e})")]
    NotPositiveSemidefinite { what: String, lambda_min: f64 },

    #[error("measurement noise not positive definite (sensor {id}, t = {t})")]
    MeasurementNoiseNotPd { id: usize, t: usize },

    #[error("{what}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        what: String,
        expected: String,
        got: String,
    },

    #[error("sensor not in ground set (id {id})")]
    SensorNotInGroundSet { id: usize },

    #[error("time index {t} out of range 1..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },

    #[error("budget exceeds ground set (k = {k}, |V| = {ground})")]
    BudgetExceedsGroundSet { k: usize, ground: usize },

    #[error("instance too large for enumeration ({combinations} subsets > cap {cap})")]
    EnumerationCapExceeded { combinations: u128, cap: u128 },

    #[error("mandatory sensors exceed budget ({mandatory} mandatory > k = {k})")]
    MandatoryExceedsBudget { mandatory: usize, k: usize },

    #[error("ground set too large for exact supermodularity ratio (|V| = {ground} > {max})")]
    GroundSetTooLarge { ground: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
