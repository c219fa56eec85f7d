use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter record violates one of its invariants.
    #[error("{field} {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("complex discriminant: eta^2 = {eta_sq:e} <= 0, the normal-solution regime does not apply")]
    ComplexDiscriminant { eta_sq: f64 },

    #[error("eta equals b: the long-run Riccati limit is undefined")]
    EtaEqualsB,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unit mismatch: cannot compare a {left} region with a {right} region")]
    UnitMismatch { left: &'static str, right: &'static str },

    #[error("nonpositive tilted speed: kappa_tilde = {kappa_tilde:e}")]
    NonpositiveTiltedSpeed { kappa_tilde: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("non-monotone stencil in dimension {dim}: A_ii/h_i^2 - sum_j |A_ij|/(h_i h_j) = {margin:e} < 0; rebalance the grid steps h_i anisotropically")]
    NonMonotoneStencil { dim: usize, margin: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("no convergence after {iterations} iterations; a-sequence: {a_history:?}")]
    NoConvergence { iterations: usize, a_history: Vec<f64> },

    #[error("empty region: the origin is in a trading zone (K too small or grid too coarse)")]
    EmptyRegion,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
