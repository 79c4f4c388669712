use thiserror::Error;

use crate::lattice::Axis;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice parameters: {0}")]
    InvalidSpec(String),

    #[error("lattice {dims} exceeds the node capacity of {limit}")]
    Capacity { dims: String, limit: u64 },

    #[error("layer range [{first}, {last}] is outside 0..{layers}")]
    LayerBounds { first: u32, last: u32, layers: u32 },

    #[error("window length {window} must lie in 2..={length}")]
    WindowOutOfRange { window: u32, length: u32 },

    #[error("block has a single layer along the {0} axis")]
    DegenerateAxis(Axis),

    #[error("at least one trial is required")]
    NoTrials,

    #[error("contract violation: {0}")]
    Contract(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
