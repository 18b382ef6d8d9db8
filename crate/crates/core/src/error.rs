use thiserror::Error;

use crate::tree::NodeId;

/// Errors raised by graph ingestion, tree edits, entropy evaluation and the encoder.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: self-loop on `{token}`")]
    SelfLoop { line: usize, token: String },

    #[error("self-loop on vertex {0}")]
    SelfLoopVertex(usize),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("label hierarchy contains a cycle through `{0}`")]
    TaxonomyCycle(String),

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("graph has no edges; structural entropy is undefined")]
    EdgelessGraph,

    #[error("node {0} does not exist")]
    UnknownNode(NodeId),

    #[error("node {0} is not a child of the root")]
    NotRootChild(NodeId),

    #[error("cannot merge node {0} with itself")]
    SelfMerge(NodeId),

    #[error("node {0} is the root")]
    IsRoot(NodeId),

    #[error("node {0} is a leaf")]
    IsLeaf(NodeId),

    #[error("coding tree was built for a different graph")]
    GraphMismatch,

    #[error("invalid coding tree: {0}")]
    InvalidTree(String),

    #[error("tree is not layer-aligned at node {0}")]
    NotAligned(NodeId),

    #[error(
        "graph with {n} vertices is too large for exhaustive search at height {k} (cap {cap})"
    )]
    TooLargeForOracle { n: usize, k: usize, cap: usize },

    #[error("height must be at least 1")]
    ZeroHeight,

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty layer {0}")]
    EmptyLayer(usize),

    #[error("label parent relation contains a cycle through label {0}")]
    ParentCycle(usize),

    #[error("prediction set is empty")]
    EmptyPredictions,

    #[error("threshold {0} outside (0, 1)")]
    BadThreshold(f64),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
