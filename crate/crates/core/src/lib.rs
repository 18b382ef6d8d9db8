//! Structural-entropy coding trees for graphs and label hierarchies.
//!
//! * [`graph`]: simple undirected graphs, edge-list and taxonomy ingestion.
//! * [`tree`]: coding trees with merge / delete / shift edits and validation.
//! * [`entropy`]: structural entropy, closed-form edit deltas and an
//!   exhaustive optimum for tiny graphs.
//! * [`circa`]: greedy three-stage coding-tree construction and a random
//!   pairing baseline.
//! * [`encoder`]: forward pass of the tree isomorphism encoder and losses.
//! * [`metrics`]: micro/macro F1.

pub mod circa;
pub mod encoder;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod tree;

pub use circa::{circa, random_tree, CircaTrace};
pub use encoder::{DenseMatrix, LossConfig, NormMode, PoolMode, TinWeights};
pub use entropy::{
    brute_force_k_entropy, delete_delta, merge_delta, one_dim_entropy, structural_entropy,
    EntropyReport,
};
pub use error::{Error, Result};
pub use graph::{from_taxonomy, Graph, Taxonomy, VertexSubset};
pub use metrics::{macro_f1, micro_f1, PredictionSet};
pub use tree::{CodingTree, NodeId, Property, Shape, TreeDoc, ValidationReport};
