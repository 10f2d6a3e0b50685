use thiserror::Error;

/// Errors raised across the lab. Variants mirror the failure modes of each stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input plane is not Lagrangian: symplectic residual {residual:.3e}")]
    NonLagrangianInput { residual: f64 },
    #[error("planes are not transversal: smallest angle {min_angle:.3e}")]
    NotTransversal { min_angle: f64 },
    #[error("invalid Lawlor parameters: {0}")]
    InvalidParameters(String),
    #[error(
        "quadrature did not converge: estimated error {estimate:.3e} above tolerance {tol:.3e}"
    )]
    QuadratureNonConvergence { estimate: f64, tol: f64 },
    #[error("sample radius {radius} is below the graph validity radius {r0}")]
    RadiusTooSmall { radius: f64, r0: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("infeasible angle targets: {0}")]
    InfeasibleTargets(String),
    #[error("alpha = {alpha} outside admissible range: {reason}")]
    AlphaTooLarge { alpha: f64, reason: String },
    #[error("asymptotic planes of neck and exterior pieces disagree by {gap:.3e}")]
    PlaneMismatch { gap: f64 },
    #[error("inconsistent parameters: {0}")]
    ParameterInconsistency(String),
    #[error("point outside chart domain: {0}")]
    ChartDomainError(String),
    #[error("singular metric in element {cell}")]
    SingularMetric { cell: usize },
    #[error("eigensolver did not converge: residual {residual:.3e}")]
    EigenNonConvergence { residual: f64 },
    #[error("projection onto the eigenfunction degenerated: {0:.3e}")]
    DegenerateProjection(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mesh resolution infeasible: {0}")]
    ResolutionInfeasible(String),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
