use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate density: total mass is zero")]
    DegenerateDensity,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid grid function values: {0}")]
    InvalidValues(String),

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("operation requires a {expected} grid")]
    WrongDimension { expected: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quantile ill-defined: {0}")]
    QuantileIllDefined(String),

    #[error("transport map not monotone at cell {cell}: violation {violation:e}")]
    NonMonotoneMap { cell: usize, violation: f64 },

    #[error("eps underflow: eps = {eps:e} is below the kernel resolution; use eps >= {suggested_min:e} (h^2/4)")]
    EpsUnderflow { eps: f64, suggested_min: f64 },

    #[error(
        "densities must be strictly positive on active cells (cell {cell} has value {value:e})"
    )]
    NotStrictlyPositive { cell: usize, value: f64 },

    #[error("mollifier support does not fit: need enclosing radius >= {required_radius} (dist(Omega, boundary) >= 2/n)")]
    KernelSupport { required_radius: f64 },

    #[error("size guard exceeded: {what} (limit {limit}, got {got})")]
    SizeGuard {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("time grid mismatch: no reference snapshot at t = {time}")]
    TimeGridMismatch { time: f64 },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
