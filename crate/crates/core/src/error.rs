use bellcomm_lp::LpError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("shape mismatch at {path}: {message}")]
    Shape { path: String, message: String },

    #[error("enumeration of {count} strategies exceeds the cap of {cap}; use the lazy (cutting-plane) mode")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("invalid cost model: {0}")]
    CostModel(String),

    #[error("invalid quantum input: {0}")]
    Quantum(String),

    #[error("Schmidt optimizer did not converge after {sweeps} sweeps (best value {value})")]
    NoConvergence {
        sweeps: usize,
        value: f64,
        best: Vec<f64>,
    },

    #[error("inequality cannot detect nonlocality under this cost model")]
    Undetectable,

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded: {0}")]
    Unbounded(String),

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("construction precondition violated: {0}")]
    Precondition(String),

    #[error("polytope computation: {0}")]
    Polytope(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
