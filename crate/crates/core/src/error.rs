use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Radius of curvature fell to or below zero at the listed nodes.
    #[error("convexity violated at {} node(s), min radius of curvature {min_radius:e}", nodes.len())]
    ConvexityViolation { nodes: Vec<usize>, min_radius: f64 },

    /// Support function not strictly positive: the origin is not interior.
    #[error("support function not positive at {} node(s), min value {min_support:e}", nodes.len())]
    OriginNotInterior { nodes: Vec<usize>, min_support: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
