use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve is not immersed: minimum speed {min_speed:e} at or below floor {floor:e}")]
    NonImmersed { min_speed: f64, floor: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative order {0} outside 1..=4")]
    InvalidOrder(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {value} outside [0, {length}]")]
    OutOfRange { value: f64, length: f64 },

    #[error("could not generate an immersed curve after {retries} attempts")]
    CurveGeneration { retries: usize },

    #[error("Gram matrix is not positive definite")]
    FactorizationFailure,

    #[error("controllability Gramian is singular (smallest eigenvalue {mu:e})")]
    SingularGramian { mu: f64 },

    #[error("input has non-zero mean {mean:e}")]
    NonZeroMean { mean: f64 },

    #[error("curve is not arc-length proportional (sup |speed - length| = {defect:e})")]
    NotArcLengthProportional { defect: f64 },

    #[error("frame orthonormality drifted by {drift:e} (limit {limit:e})")]
    FrameDrift { drift: f64, limit: f64 },

    #[error("step failure at t = {t} with dt = {dt:e}: {reason}")]
    StepFailure { t: f64, dt: f64, reason: String },

    #[error("trajectory tail has {found} usable records, need at least {needed}")]
    InsufficientTail { found: usize, needed: usize },

    #[error("could not generate a monotone diffeomorphism after {retries} attempts")]
    DiffeoGeneration { retries: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
