use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point is not on the manifold: {0}")]
    NotOnManifold(String),

    #[error("injectivity radius exceeded: {0}")]
    InjectivityViolation(String),

    #[error("immersion violated at node {node}: speed {speed:e} below threshold {threshold:e}")]
    ImmersionViolation { node: usize, speed: f64, threshold: f64 },

    #[error("adjacent nodes {node} and {next} are too far apart ({dist:e} >= {limit:e})")]
    AdjacencyViolation { node: usize, next: usize, dist: f64, limit: f64 },

    #[error("unsupported metric order {0}; only order 1 has an explicit geodesic equation")]
    UnsupportedOrder(usize),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("path initialisation failed at node {node}: {reason}")]
    InitFailure { node: usize, reason: String },

    #[error("{0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
