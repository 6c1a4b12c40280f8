use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("resolvent is singular at omega = {omega} rad/s")]
    SingularResolvent { omega: f64 },
    #[error("system is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    UnstableSystem { abscissa: f64 },
    #[error("system pencil is degenerate: {0}")]
    DegeneratePencil(String),
    #[error("descriptor pencil is singular: {0}")]
    SingularPencil(String),
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("Newton solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operating point out of range: {0}")]
    OutOfRange(String),
    #[error("linearization failed: {0}")]
    LinearizationFailure(String),
    #[error("invalid multiplier order: {0}")]
    InvalidOrder(String),
    #[error("multiplier state matrix is not Hurwitz")]
    NonHurwitzA,
    #[error("multiplier is singular at omega = {omega} rad/s")]
    SingularMultiplier { omega: f64 },
    #[error("feedthrough loop I + D_m D_Y is singular")]
    IllPosedFeedthrough,
    #[error("I + m Y is not minimum phase for component `{0}`")]
    MinimumPhaseViolation(String),
    #[error("no device model supplied for bus {0}")]
    MissingDeviceModel(usize),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
