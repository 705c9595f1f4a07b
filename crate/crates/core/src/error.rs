use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("degree {degree} out of range (admissible: {admissible})")]
    DegreeOutOfRange { degree: usize, admissible: String },
    #[error("empty cell subset")]
    EmptySubset,
    #[error("cell index {0} out of range")]
    InvalidCell(usize),
    #[error("cover has no sets")]
    EmptyCover,
    #[error("cover set {0} is empty")]
    EmptySet(usize),
    #[error("sets do not cover the mesh: cell {0} is missing")]
    NotACover(usize),
    #[error("unknown multi-index {0:?}")]
    UnknownIndex(Vec<usize>),
    #[error("weight error: {0}")]
    NonPositiveWeight(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("dense budget exceeded: dimension {dim} > {budget}")]
    SizeLimit { dim: usize, budget: usize },
    #[error("invalid sparse matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no cell center falls inside the inclusion")]
    InclusionTooSmall,
}
