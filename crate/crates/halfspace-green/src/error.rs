use thiserror::Error;

/// Errors produced by system construction, evaluators and quadratures.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported spatial dimension n = {0} (supported: 2, 3)")]
    UnsupportedDimension(usize),

    #[error("system is not weakly elliptic (normalized min |det L(xi)| = {min_abs_det:.3e})")]
    NotWeaklyElliptic { min_abs_det: f64 },

    #[error("evaluation point coincides with the singularity")]
    PointAtSingularity,

    #[error("finite-difference step underflow ({0:.3e})")]
    StepUnderflow(f64),

    #[error("evaluation points coincide")]
    CoincidentPoints,

    #[error("point must lie in the open upper half-space (got x_n = {0})")]
    OutsideHalfSpace(f64),

    #[error("construction route unavailable: {0}")]
    RouteUnavailable(String),

    #[error("dilation parameter t must be positive (got {0})")]
    NonpositiveT(f64),

    #[error("excluded region swallows the truncated cone")]
    EmptyCone,

    #[error("boundary datum is not integrable against the half-space weight")]
    DatumNotIntegrable,

    #[error("finite-difference step {h} too large at height x_n = {xn} (need h < x_n/3)")]
    StepTooLarge { h: f64, xn: f64 },

    #[error("truncated integral does not stabilize; norm diverges")]
    DivergentNorm,

    #[error("unknown builtin system `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
