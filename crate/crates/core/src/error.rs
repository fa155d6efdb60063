use thiserror::Error;

pub type Result<T> = std::result::Result<T, GravError>;

#[derive(Debug, Error)]
pub enum GravError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("singular prism configuration at point {point:?}")]
    SingularConfiguration { point: [f64; 3], cell: Option<usize> },

    #[error("evaluation point {point:?} lies inside source cell {cell}")]
    NearSingularity { point: [f64; 3], cell: usize },

    #[error("evaluation point {point:?} coincides with source {source_index}")]
    CoincidentSource { point: [f64; 3], source_index: usize },

    #[error("point {point:?} lies outside the octree root box")]
    OutsideTree { point: [f64; 3] },

    #[error("grid levels do not conform: {0}")]
    LevelMismatch(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {relative_residual:.3e})")]
    NotConverged {
        iterations: usize,
        relative_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("singular operator in coarse factorization")]
    SingularOperator,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
