use thiserror::Error;

/// Errors produced by the random feature library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("field has {got} values but the grid stores {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("reference field has zero L2 norm")]
    ZeroNorm,

    #[error("operation requires a periodic 1D grid, got {0}")]
    NotPeriodic(String),

    #[error("grids are not nested: {0}")]
    NotNested(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} modes but only {available} are representable on the grid")]
    TooManyModes { requested: usize, available: usize },

    #[error("non-finite feature value for sample {sample}, feature {feature}")]
    NonFiniteFeature { sample: usize, feature: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("coefficient must be strictly positive, found {value} at index {index}")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("explicit heat step unstable: eta*dt/h^2 = {ratio} exceeds 1/4")]
    Unstable { ratio: f64 },

    #[error("oracle system of size n*K = {size} exceeds the limit {limit}")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
