use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("all weights are zero")]
    AllZero,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty alphabet or sequence")]
    Empty,

    #[error("marginal probability is zero")]
    ZeroMarginal,

    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfAlphabet { symbol: usize, size: usize },

    #[error("distribution has zero mass where the type has positive count (symbol {symbol})")]
    SupportViolation { symbol: usize },

    #[error("{what}: instance size {size} exceeds limit {limit}")]
    InstanceTooLarge { what: String, size: f64, limit: f64 },

    #[error("exponent {value} at index {index} is not positive")]
    NonPositiveExponent { index: usize, value: f64 },

    #[error("weight {value} at index {index} is not positive")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("gaussian peak too close to the simplex boundary (min center {min_center}, margin {margin})")]
    PeakNearBoundary { min_center: f64, margin: f64 },

    #[error("smallest curvature {min} below required {required}")]
    LambdaTooSmall { min: f64, required: f64 },

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("rank-one update is singular (1 + qᵀE⁻¹p = {denominator})")]
    SingularUpdate { denominator: f64 },

    #[error("no convergence after {iterations} iterations (gap {gap})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("information ratio undefined at ({x}, {y})")]
    UndefinedRatio { x: usize, y: usize },

    #[error("invalid distortion matrix: {0}")]
    InvalidDistortion(String),

    #[error("codebook workload {cost} exceeds limit {limit}")]
    CodebookTooLarge { cost: f64, limit: f64 },

    #[error("reproduction marginal has a zero entry at symbol {symbol}")]
    DegenerateMarginal { symbol: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ConfigInvalid(e.to_string())
    }
}
