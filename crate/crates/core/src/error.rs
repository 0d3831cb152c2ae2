use thiserror::Error;

use crate::modelio::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid mapping: {0}")]
    Mapping(String),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("mapping mismatch: {0}")]
    MappingMismatch(String),

    #[error("abstraction mapping has no proper state mapping (all entities use the identity)")]
    ImproperMapping,

    #[error("infinite trace set: {0}")]
    InfiniteTraceSet(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("state {0} is not in the state space")]
    StateOutOfSpace(String),

    #[error("gamma is not a non-empty subset of A({state})")]
    GammaOutOfClass { state: String },

    #[error("A({state}) has {size} members; step-term enumeration is capped at {limit}")]
    ClassTooLarge { state: String, size: usize, limit: usize },

    #[error("step-term family is not closed: {0}")]
    NotClosed(String),

    #[error("state space of {size} states exceeds the limit of {limit}")]
    StateSpaceTooLarge { size: u64, limit: u64 },

    #[error("not a path in the abstract state graph: {0}")]
    NotAPath(String),
}

pub type Result<T> = std::result::Result<T, Error>;
