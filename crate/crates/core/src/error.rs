use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("window too small: need at least {min}, got {got}")]
    WindowTooSmall { min: usize, got: usize },
    #[error("coupling t = {t} is degenerate for this operation")]
    DegenerateCoupling { t: f64 },
    #[error("operation requires a constant coupling law")]
    VaryingCoupling,
    #[error("model variant `{found}` not supported here (expected {expected})")]
    WrongVariant { expected: &'static str, found: &'static str },
    #[error("track spans {got} pairs, need at least {min}")]
    SpanTooShort { min: usize, got: usize },
    #[error("initial vector is zero")]
    ZeroInitialVector,
    #[error("elimination is ill-conditioned at k = {k} (condition {cond:.3e})")]
    IllConditioned { k: i64, cond: f64 },
    #[error("lambda = {lambda} lies within {radius} of a branch point")]
    NearBranch { lambda: f64, radius: f64 },
    #[error("lambda = {lambda} is not in a spectral gap")]
    NotInGap { lambda: f64 },
    #[error("dense eigensolve limited to {max} sites, requested {requested}")]
    BudgetExceeded { max: usize, requested: usize },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("cross-check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("no report found: {0}")]
    MissingReport(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
