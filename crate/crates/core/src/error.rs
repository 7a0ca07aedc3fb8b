use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("face {0} is degenerate (area below 1e-12)")]
    DegenerateFace(usize),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("input points are degenerate: {0}")]
    DegenerateInput(String),
    #[error("tetrahedron is degenerate, circumsphere undefined")]
    DegenerateTetrahedron,

    #[error("no tetrahedra selected")]
    EmptySelection,
    #[error("mesh is empty: {0}")]
    EmptyMesh(String),

    #[error("mesh has no surface to sample (total area below 1e-12)")]
    NoSurface,

    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud has no normals")]
    MissingNormals,
    #[error("vertex {0} has no incident face")]
    IsolatedVertex(usize),
    #[error("vertex count mismatch: {left} vs {right}")]
    VertexCountMismatch { left: usize, right: usize },
    #[error("mesh has no edges")]
    NoEdges,

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("unknown protocol: {0}")]
    UnknownProtocol(String),

    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported element: {0}")]
    UnsupportedElement(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
