use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("lattice periods are degenerate (Im(ω₁/ω₂) = 0)")]
    DegenerateLattice,
    #[error("series did not converge at z = {re} + {im}i")]
    SeriesNotConverged { re: f64, im: f64 },
    #[error("point {re} + {im}i lies on a pole")]
    AtPole { re: f64, im: f64 },
    #[error("a zero or pole lies on the contour")]
    BoundaryCollision,
    #[error("contour quadrature did not converge")]
    QuadratureNotConverged,
    #[error("newton iteration diverged")]
    NewtonDiverged,
    #[error("root count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("need at least {needed} branches, got {got}")]
    InsufficientBranches { needed: usize, got: usize },
    #[error("hypothesis violated: α₁ = {alpha1} must exceed -1 - 1/q = {limit}")]
    HypothesisViolated { alpha1: f64, limit: f64 },
    #[error("branch magnitude {0} is not contracting")]
    NotContracting(f64),
    #[error("no Bowen root in the search bracket")]
    NoRoot,
    #[error("degenerate mask: {0}")]
    DegenerateMask(String),
}
