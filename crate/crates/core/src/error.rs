use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("vertex {0} is not finite")]
    NonFiniteVertex(usize),

    #[error("vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),

    #[error("edge {0} has zero length")]
    ZeroLengthEdge(usize),

    #[error("vertices are not in counterclockwise order (signed area {0:.6e})")]
    NotCounterclockwise(f64),

    #[error("polygon is not simple: edges {0} and {1} intersect")]
    SelfIntersection(usize, usize),

    #[error("polygon is not star-shaped w.r.t. node ({0}, {1})")]
    NotStarShaped(f64, f64),

    #[error("triangle is degenerate (signed area {0:.3e})")]
    DegenerateTriangle(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel {0} is not differentiable")]
    NotDifferentiable(String),

    #[error("malformed kernel spec {0:?}: {1}")]
    KernelSpec(String, String),

    #[error("quadrature self-test failed: {0}")]
    QuadratureDefect(String),

    #[error("{0} did not converge")]
    NoConvergence(String),

    #[error("degenerating iterate: {0} consecutive step rejections at iteration {1}")]
    DegeneratingIterate(usize, usize),

    #[error("vertex count mismatch: {0} vs {1}")]
    VertexCountMismatch(usize, usize),

    #[error("{path}: {reason}")]
    PolygonFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
