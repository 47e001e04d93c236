use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("a star graph needs at least two edges, got {0}")]
    TooFewEdges(usize),

    #[error("spectral parameter must satisfy Im ζ >= 0, got {0}")]
    LowerHalfPlane(num_complex::Complex64),

    #[error("no truncation point found with tail bound below {tau:e}")]
    TailNotIntegrable { tau: f64 },

    #[error("step size underflow at x = {x} (error control could not meet tolerance)")]
    StiffnessFailure { x: f64 },

    #[error("moment of order {order} required but infinite on edge {edge}")]
    MomentRequired { edge: usize, order: u8 },

    #[error("Jost function vanishes on edge {0}")]
    JostZero(usize),

    #[error("spectral parameter ζ = 0 is not allowed here")]
    ZeroSpectralParam,

    #[error("z is (numerically) an eigenvalue: |P(ζ)| = {0:e}")]
    EigenvalueHit(f64),

    #[error("grid too coarse: zeros not separated in κ-cell [{lo}, {hi}]")]
    GridTooCoarse { lo: f64, hi: f64 },

    #[error("zero-energy classification ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("anchor too small: |D(k²) - 1| = {deviation} at k = {k}")]
    AnchorTooSmall { k: f64, deviation: f64 },

    #[error("phase refinement limit reached on k-interval [{lo}, {hi}]")]
    RefinementLimit { lo: f64, hi: f64 },

    #[error("fit window contains a bound state at κ = {0}")]
    WindowContainsZero(f64),

    #[error("spectral shift tail estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    TailTooFat { estimate: f64, tolerance: f64 },

    #[error("discretization too large: {0} unknowns")]
    DimensionOverflow(usize),

    #[error("oracle levels disagree: {0}")]
    NotConverged(String),

    #[error("shift is (numerically) singular for the discrete operator")]
    SingularShift,

    #[error("trust region exceeded: sqrt(t)·h = {0}")]
    TrustRegionExceeded(f64),

    #[error("config schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
