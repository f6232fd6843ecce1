//! Decentralised multicast trees over geometric peer-to-peer overlays.
//!
//! Peers carry self-chosen D-dimensional coordinates. The [`overlay`] module
//! grows a neighbour graph from gossip, [`multicast`] builds a tree that reaches
//! every peer with one message each by splitting responsibility zones along
//! orthants, and [`stability`] links peers towards longer-lived neighbours so
//! departures never cut the tree. [`oracle`] holds brute-force checks and
//! [`harness`] drives the experiment sweeps behind the `geocast` CLI.

pub mod cli;
pub mod error;
pub mod geometry;
mod graph;
pub mod harness;
pub mod multicast;
pub mod oracle;
pub mod overlay;
pub mod stability;

pub use error::{Error, Result};
pub use geometry::{Coord, HyperRect, HyperplaneSet, RegionId, SpaceSpec};
pub use multicast::{build_tree, MulticastTree, TreeMetrics, Zone};
pub use overlay::{KnowledgeMode, Peer, PeerId, SelectionStrategy, Topology};
pub use stability::{StabilityConfig, StabilityTree};
