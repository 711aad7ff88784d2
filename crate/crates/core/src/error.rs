use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bracket failure: no sign change of {kind} in [{lo}, {hi}]")]
    BracketFailure { kind: &'static str, lo: f64, hi: f64 },
    #[error("count mismatch: found {found} zeros, expected {expected}")]
    CountMismatch { found: usize, expected: usize },
    #[error("rectangle boundary too close to a zero (min |S| = {min_modulus:e})")]
    BoundaryTooClose { min_modulus: f64 },
    #[error("pole proximity: denominator modulus {modulus:e}")]
    PoleProximity { modulus: f64 },
    #[error("ν = {re}+{im}i lies on an excluded line of the pole-free strip")]
    PoleStripViolation { re: f64, im: f64 },
    #[error("no threshold: all zeros on one side of bound {bound}")]
    NoThreshold { bound: f64 },
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("tube violation: max |s| = {max_abs} ≥ {limit}")]
    TubeViolation { max_abs: f64, limit: f64 },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("linear solve did not converge (relative residual {residual:e})")]
    NotConverged { residual: f64 },
    #[error("derivative unresolved: extrapolation spread {spread:.3}")]
    DerivativeUnresolved { spread: f64 },
    #[error("insufficient decay data: {0}")]
    InsufficientData(String),
    #[error("geometry: {0}")]
    Geometry(String),
}

impl Error {
    /// Validation-type failures (bad input) as opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParams(_) | Error::Unsupported(_) | Error::Geometry(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
