use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("excluded configuration: {0}")]
    ExcludedConfiguration(String),
    #[error("case assumption violated: {0}")]
    CaseAssumption(String),
    #[error("evaluation point {r} lies within tolerance of the pole {alpha}")]
    PoleProximity { r: String, alpha: f64 },
    #[error("condition on the mean violated: E[X(1)] = {0} must be positive for q = 0")]
    ConditionOne(f64),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("root count mismatch: expected {expected}, winding gave {winding}, found {found}")]
    CountMismatch { expected: usize, winding: i64, found: usize },
    #[error("root search did not converge: {0}")]
    NonConvergence(String),
    #[error("contour passes through or too close to a zero")]
    ContourThroughZero,
    #[error("roots too close for stable constants: separation {0:e}")]
    IllSeparated(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("series exceeded {0} terms without meeting the tolerance")]
    SeriesLimit(usize),
    #[error("insufficient precision: {0}")]
    PrecisionInsufficient(String),
    #[error("inversion unstable: {0}")]
    OscillatoryDivergence(String),
    #[error("point {0} is a singularity of the transform")]
    SingularPoint(String),
    #[error("u = {u} is beyond the computed range {u_max}")]
    Extrapolation { u: f64, u_max: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
