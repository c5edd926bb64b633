use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("slopes must be nondecreasing: slope {index} is {value} after {previous}")]
    NonConvexInput { index: usize, previous: f64, value: f64 },

    #[error("function takes positive value {value}")]
    PositivityViolation { value: f64 },

    #[error("negative slope {0}: toric functions are nondecreasing in log-modulus")]
    NegativeSlope(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input")]
    EmptyInput,

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("infinite energy: Monge-Ampere mass {mass} sits on the pole")]
    InfiniteEnergy { mass: f64 },

    #[error("degenerate set: {0}")]
    DegenerateSet(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty level set at level {0}")]
    EmptyLevelSet(f64),

    #[error("inconsistent condenser levels: {0}")]
    InconsistentLevels(String),

    #[error("truncation did not stabilize after depth {depth} (last change {change})")]
    NoConvergence { depth: f64, change: f64 },

    #[error("endpoint has a logarithmic pole (tail slope {tail_slope}); no geodesic exists")]
    SingularEndpoint { tail_slope: f64 },

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
