use thiserror::Error;

/// Errors raised anywhere in the hypergraph pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge} face {face} has no incident hypernode")]
    DanglingFace { edge: usize, face: usize },

    #[error("hypernode {node} of kind {kind} has degree {degree}")]
    DegreeMismatch {
        node: usize,
        kind: &'static str,
        degree: usize,
    },

    #[error("hypergraph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("incidence edge {edge} face {face} -> node {node} fails the point check (deviation {deviation:e})")]
    GeometryMismatch {
        edge: usize,
        face: usize,
        node: usize,
        deviation: f64,
    },

    #[error("trace of length {got} does not match node space of dimension {expected}")]
    BasisMismatch { expected: usize, got: usize },

    #[error("mesh guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("unsupported quadrature order {0} (supported range 1..=16)")]
    UnsupportedOrder(usize),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("local system of edge {edge} is singular")]
    SingularLocalSystem { edge: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("isometry scatter failed for edge {edge} face {face}")]
    OrientationError { edge: usize, face: usize },

    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("error list contains non-positive value {0}")]
    NonPositiveError(f64),

    #[error("thin-domain geometry overlaps: {0}")]
    OverlapError(String),

    #[error("thin-domain solve failed: {0}")]
    SolveFailure(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
