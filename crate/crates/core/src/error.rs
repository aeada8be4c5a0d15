use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),

    #[error("field defined on manifold {field} applied to manifold {manifold}")]
    ManifoldMismatch { field: u64, manifold: u64 },

    #[error("operation `{op}` is not supported on manifold kind `{kind}`")]
    UnsupportedManifold { op: &'static str, kind: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter system infeasible for N={dim}, p={p} (threshold ≈ {threshold:.5})")]
    Infeasible { dim: u32, p: f64, threshold: f64 },

    #[error("linear solve failed to converge: {0}")]
    SolveFailure(String),

    #[error("time step failed at t={t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("minimization did not converge after {iterations} iterations")]
    NonConverged { iterations: usize },

    #[error("no periodic orbit found: {0}")]
    NoOrbit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
