//! Level-bounded optimization of And-Inverter Graphs.
//!
//! The crate maintains node depth (levels), observability depth (reverse
//! levels) and a partial topological order dynamically while local rewrites
//! edit the graph, so that depth-bounded optimization never pays for a
//! global recomputation per accepted change.

pub mod aig;
pub mod aiger;
pub mod cut;
pub mod error;
pub mod flow;
pub mod generators;
pub mod level;
pub mod order;
pub mod report;
pub mod resynth;
pub mod verify;

pub use aig::{AffectedSets, AigGraph, AigNode, Edge, NodeId, NodeKind};
pub use error::{Error, Result};
pub use flow::{EngineKind, EngineState, FlowObserver, FlowParams, OperatorKind, RunReport};
pub use level::{LevelBudget, LevelMap, MaintStats, ReverseMap};
pub use order::{HandleMap, OrderList, VisitMap};
