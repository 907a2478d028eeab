use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrorError {
    #[error("degenerate edge: vector length {0:e} is below the minimum")]
    DegenerateEdge(f64),

    #[error("rotation axis is not unit length (norm {0})")]
    NonUnitAxis(f64),

    #[error("matrix is not a proper rotation: {0}")]
    InvalidRotation(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("correspondence set has {0} entries, at least 2 are required")]
    EmptySet(usize),

    #[error("no consensus: no edge explains three or more correspondences")]
    NoConsensus,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coordinate in correspondence {0}")]
    NonFinite(usize),
}

pub type Result<T, E = GrorError> = std::result::Result<T, E>;
