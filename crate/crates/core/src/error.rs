use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("too many vertices: {count} exceeds the cap of {cap}")]
    TooManyVertices { count: usize, cap: usize },
    #[error("halfspace intersection is unbounded")]
    Unbounded,
    #[error("halfspace intersection is empty")]
    Empty,
    #[error("no direction with |<u_i, v>| >= {delta} found after {attempts} attempts")]
    GenericityFailure { delta: f64, attempts: usize },
    #[error("degenerate simplex (Gram determinant {0:e})")]
    DegenerateSimplex(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial degree {degree} exceeds the cap of {cap}")]
    DegreeTooHigh { degree: u32, cap: u32 },
    #[error("weight does not match the face chart: {0}")]
    ChartMismatch(String),
    #[error("covariance is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("polytope is not isotropic (deviation {0:e})")]
    NotIsotropic(f64),
    #[error("edge {edge} is not contained in facet {facet}")]
    EdgeNotInFacet { edge: usize, facet: usize },
    #[error("facet index {0} out of range")]
    NoSuchFacet(usize),
    #[error("direction is not generic: min |<u_i, v>| = {min:e} < {delta:e}")]
    NotGeneric { min: f64, delta: f64 },
    #[error("parameter t = {t} outside the admissible range [0, {t_max}]")]
    RangeExceeded { t: f64, t_max: f64 },
    #[error("perturbed polytope at t = {0} is not full-dimensional")]
    DegenerateResult(f64),
    #[error("resolution {resolution} exceeds the cap of {cap}")]
    ResolutionTooHigh { resolution: usize, cap: usize },
    #[error("measure masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("negative weight {0} in a measure required to be nonnegative")]
    NegativeWeight(f64),
    #[error("too many atoms: {count} exceeds the cap of {cap}")]
    TooManyAtoms { count: usize, cap: usize },
    #[error("boundary function does not match the face triangulation: {0}")]
    TriangulationMismatch(String),
    #[error("solver stalled after {iterations} iterations (residual {residual:e})")]
    SolverStalled { iterations: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
