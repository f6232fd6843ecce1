use thiserror::Error;

use crate::overlay::{PeerId, Topology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("coordinates coincide in dimension {dim}")]
    NotDistinct { dim: usize },
    #[error("empty interval in dimension {dim}")]
    EmptySide { dim: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid hyperplane set: {0}")]
    InvalidPlanes(String),
}

#[derive(Debug, Error)]
pub enum OverlayError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("peer generation gave up after {attempts} draws")]
    Generation { attempts: u64 },
    #[error("unknown peer {0}")]
    UnknownPeer(PeerId),
    #[error("duplicate peer id {0}")]
    DuplicatePeer(PeerId),
    #[error("bootstrap set is empty but the overlay already has peers")]
    EmptyBootstrap,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Carries the last two topologies so an oscillation can be inspected.
    #[error("no fixed point after {rounds} rounds")]
    NonConvergence { rounds: usize, previous: Box<Topology>, last: Box<Topology> },
}

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("peer {0} has no lifetime")]
    MissingLifetime(PeerId),
    #[error("peers {0} and {1} share a lifetime")]
    DuplicateLifetime(PeerId, PeerId),
    #[error("time coordinate index {index} outside 1..={dims}")]
    BadCoordIndex { index: usize, dims: usize },
    #[error("embedded lifetimes collide after rescaling")]
    EmbeddingCollision,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("unknown root peer {0}")]
    UnknownRoot(PeerId),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
