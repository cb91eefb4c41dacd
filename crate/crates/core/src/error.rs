use thiserror::Error;

/// Errors produced by the geometry, assembly and spectral layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} components, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cross product in dimension {dim} needs {expected} vectors, got {found}")]
    CrossProductArity { dim: usize, expected: usize, found: usize },

    #[error("ball radius {radius} outside the convexity range (0, {limit})")]
    NonConvexBall { radius: f64, limit: f64 },

    #[error("degenerate metric at ({u}, {v}): not an immersion")]
    NonImmersion { u: f64, v: f64 },

    #[error("point ({u}, {v}) is outside the parameter domain")]
    OutsideDomain { u: f64, v: f64 },

    #[error("boundary point ({u}, {v}) is a corner of the parameter domain")]
    DomainCorner { u: f64, v: f64 },

    #[error("H2 = {h2} <= 0 at ({u}, {v}): no orientation makes P1 positive definite")]
    NoPositiveOrientation { h2: f64, u: f64, v: f64 },

    #[error("inadmissible geometry: {0}")]
    Inadmissible(String),

    #[error("ODE integration failed: {0}")]
    OdeFailure(String),

    #[error("shooting did not converge: {0}")]
    ShootingFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("support geometry required: {0}")]
    MissingSupport(String),

    #[error("P1 is not positive definite at vertex {vertex} (smallest eigenvalue {min_eig})")]
    IndefiniteNewtonTensor { vertex: usize, min_eig: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("function is identically zero within tolerance {tolerance:e}")]
    IdenticallyZero { tolerance: f64 },

    #[error("umbilic locus is not isolated near ({u}, {v})")]
    DegenerateLocus { u: f64, v: f64 },

    #[error("variation is not admissible: boundary deviation {deviation:e}")]
    NotAdmissible { deviation: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
