use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the solver.
///
/// Numerical routines never silently return garbage: a non-finite evaluation,
/// a missing bracket, or an evaluation outside the region where a model is
/// defined all surface as typed errors carrying the offending coordinates.
#[derive(Debug, Error)]
pub enum Error {
    #[error("function evaluation returned a non-finite value at x = {x}")]
    NonFiniteEvaluation { x: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder failed to converge within {max_iter} iterations")]
    NoConvergence { max_iter: usize },

    #[error("conditional density is zero at (theta = {theta}, v = {v}) and the family declares no extension")]
    UndefinedDensity { theta: f64, v: f64 },

    #[error("signal density is zero at theta = {theta}")]
    UndefinedSignalDensity { theta: f64 },

    #[error("point (theta = {theta}, v = {v}) is excluded: the virtual value is not positive there")]
    ExcludedPoint { theta: f64, v: f64 },

    #[error("model assumption violated: {check} fails ({detail})")]
    AssumptionViolated { check: &'static str, detail: String },

    #[error("{operation} requires a multiplicative value family")]
    UnsupportedModel { operation: &'static str },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid price schedule: {0}")]
    InvalidSchedule(String),

    #[error("tabulated family: {0}")]
    TabulatedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
