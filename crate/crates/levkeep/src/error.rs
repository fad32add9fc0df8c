//! Crate-wide error type.

use crate::aig::NodeId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0:?} is dead or out of range")]
    DeadNode(NodeId),
    #[error("node {0:?} is not an AND node")]
    NotAnAnd(NodeId),
    #[error("an update transaction is already open")]
    NestedTransaction,
    #[error("no update transaction is open")]
    NoTransaction,
    #[error("transaction already performed irreversible structural edits")]
    Irreversible,
    #[error("cannot replace node {0:?} by an edge to itself")]
    SelfReplace(NodeId),
    #[error("cannot delete node {node:?}: {reason}")]
    CannotDelete { node: NodeId, reason: &'static str },
    #[error("combinational loop detected at node {0:?}")]
    Cycle(NodeId),
    #[error("cut is not a valid cut of the root: {0}")]
    InvalidCut(String),
    #[error("node {0:?} is not eligible for the order list")]
    NotOrderable(NodeId),
    #[error("aiger parse error at byte {offset}: {msg}")]
    AigerParse { offset: usize, msg: String },
    #[error("unsupported aiger feature: {0}")]
    AigerUnsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
