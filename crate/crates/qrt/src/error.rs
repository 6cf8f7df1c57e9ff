use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QrtError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ambiguous phase: {0}")]
    AmbiguousPhase(String),
    #[error("gap closed (eps = {eps:e})")]
    GapClosed { eps: f64 },
    #[error("outside FSP: {0}")]
    OutsideFsp(String),
    #[error("mean-field solver did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("dynamical instability: {0}")]
    DynamicalInstability(String),
    #[error("divergent at the phase boundary")]
    Divergent,
    #[error("finite-difference re-solve failed at g1 = {g1}")]
    StepTooLarge { g1: f64 },
    #[error("zero variance")]
    ZeroVariance,
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
    #[error("Hilbert dimension {dim} exceeds limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("degenerate ground state (gap {gap:e})")]
    DegenerateGroundState { gap: f64 },
    #[error("chiral ansatz has only uniform solutions here")]
    NoChiralSolution,
}

pub type Result<T> = std::result::Result<T, QrtError>;

impl QrtError {
    /// Short machine-readable tag used in table status columns.
    pub fn tag(&self) -> &'static str {
        match self {
            QrtError::Domain(_) => "domain",
            QrtError::AmbiguousPhase(_) => "ambiguous",
            QrtError::GapClosed { .. } => "gap_closed",
            QrtError::OutsideFsp(_) => "outside_fsp",
            QrtError::NoConvergence { .. } => "no_convergence",
            QrtError::DynamicalInstability(_) => "unstable",
            QrtError::Divergent => "divergent",
            QrtError::StepTooLarge { .. } => "step_too_large",
            QrtError::ZeroVariance => "zero_variance",
            QrtError::InsufficientPoints(_) => "insufficient_points",
            QrtError::DimensionTooLarge { .. } => "dimension_too_large",
            QrtError::DegenerateGroundState { .. } => "degenerate",
            QrtError::NoChiralSolution => "no_chiral_solution",
        }
    }
}
