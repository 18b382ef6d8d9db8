//! Structural entropy of a graph on a coding tree, and closed-form entropy
//! changes for the merge and delete edits.
//!
//! All quantities are in bits. A term whose out-degree or volume is zero
//! contributes exactly zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::{CodingTree, NodeId};

pub mod exact;

pub use exact::brute_force_k_entropy;

/// Per-node contribution to a structural entropy total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeTerm {
    pub node: NodeId,
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub total: f64,
    /// One entry per non-root node, ascending by node id.
    pub terms: Vec<NodeTerm>,
    pub log_base: u32,
}

/// `-(g/vol_G)·log2(vol/vol_parent)`, zero when `g` or `vol` is zero.
pub fn node_term(
    out_degree: usize,
    volume: usize,
    parent_volume: usize,
    graph_volume: usize,
) -> f64 {
    if out_degree == 0 || volume == 0 {
        return 0.0;
    }
    -(out_degree as f64 / graph_volume as f64) * (volume as f64 / parent_volume as f64).log2()
}

pub fn structural_entropy(g: &Graph, t: &CodingTree) -> Result<EntropyReport> {
    if g.fingerprint() != t.graph_hash() {
        return Err(Error::GraphMismatch);
    }
    let vol_g = g.volume();
    if vol_g == 0 {
        return Err(Error::EdgelessGraph);
    }
    let mut terms = Vec::with_capacity(t.node_count());
    for id in t.node_ids() {
        let node = t.node(id);
        let Some(parent) = node.parent() else {
            continue;
        };
        let term = node_term(
            node.out_degree(),
            node.volume(),
            t.node(parent).volume(),
            vol_g,
        );
        terms.push(NodeTerm { node: id, term });
    }
    let total = terms.iter().map(|t| t.term).sum();
    Ok(EntropyReport {
        total,
        terms,
        log_base: 2,
    })
}

/// Entropy of the star tree: `-Σ_v (d_v/vol)·log2(d_v/vol)`.
pub fn one_dim_entropy(g: &Graph) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let vol_g = g.volume();
    if vol_g == 0 {
        return Err(Error::EdgelessGraph);
    }
    Ok((0..g.n())
        .map(|v| node_term(g.degree(v), g.degree(v), vol_g, vol_g))
        .sum())
}

/// Entropy change from merging two root children with the given cut and
/// volumes: `(2·cut/vol_G)·log2((vol_i+vol_j)/vol_G)`.
pub fn merge_delta_from_parts(cut: usize, vol_i: usize, vol_j: usize, graph_volume: usize) -> f64 {
    if cut == 0 {
        return 0.0;
    }
    let merged = (vol_i + vol_j) as f64;
    (2.0 * cut as f64 / graph_volume as f64) * (merged / graph_volume as f64).log2()
}

/// `H(T.merge(vi, vj)) − H(T)`; never positive.
pub fn merge_delta(g: &Graph, t: &CodingTree, vi: NodeId, vj: NodeId) -> Result<f64> {
    t.check_graph(g)?;
    if g.volume() == 0 {
        return Err(Error::EdgelessGraph);
    }
    if vi == vj {
        return Err(Error::SelfMerge(vi));
    }
    for v in [vi, vj] {
        let node = t.get(v).ok_or(Error::UnknownNode(v))?;
        if node.parent() != Some(t.root()) {
            return Err(Error::NotRootChild(v));
        }
    }
    let cut = t.cut_between(g, vi, vj);
    Ok(merge_delta_from_parts(
        cut,
        t.node(vi).volume(),
        t.node(vj).volume(),
        g.volume(),
    ))
}

/// `H(T.delete(v)) − H(T)` from cached values; never negative.
pub fn delete_delta_cached(t: &CodingTree, v: NodeId, graph_volume: usize) -> f64 {
    let node = t.node(v);
    let parent = t.node(node.parent().expect("internal node has a parent"));
    let child_cut: usize = node
        .children()
        .iter()
        .map(|&c| t.node(c).out_degree())
        .sum();
    let excess = child_cut - node.out_degree();
    if excess == 0 || node.volume() == 0 {
        return 0.0;
    }
    (excess as f64 / graph_volume as f64) * (parent.volume() as f64 / node.volume() as f64).log2()
}

/// `H(T.delete(v)) − H(T)`; never negative.
pub fn delete_delta(g: &Graph, t: &CodingTree, v: NodeId) -> Result<f64> {
    t.check_graph(g)?;
    if g.volume() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let node = t.get(v).ok_or(Error::UnknownNode(v))?;
    if v == t.root() {
        return Err(Error::IsRoot(v));
    }
    if node.is_leaf() {
        return Err(Error::IsLeaf(v));
    }
    Ok(delete_delta_cached(t, v, g.volume()))
}
