use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported order {order} for {family} filters")]
    UnsupportedOrder { family: String, order: usize },
    #[error("bad length {0}: expected a power of two")]
    BadLength(usize),
    #[error("too many levels: requested {requested}, at most {max} allowed")]
    TooManyLevels { requested: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("level {level} out of range (valid: {lo}..={hi})")]
    LevelOutOfRange { level: usize, lo: usize, hi: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("insufficient regularity: derivative order {order} needs at least {needed} vanishing moments, filter has {have}")]
    InsufficientRegularity { order: usize, needed: usize, have: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("bad grid shape: {0}")]
    BadShape(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("wavefunction not normalized: norm^2 = {0}")]
    NotNormalized(f64),
    #[error("time step {dt} violates stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("linear solver did not converge: {0}")]
    SolverDivergence(String),
    #[error("nonlinear operator terms are not supported: {0}")]
    UnsupportedNonlinearity(String),
    #[error("bad coefficient-matrix spec: {0}")]
    BadSpec(String),
    #[error("field is identically zero")]
    ZeroField,
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
