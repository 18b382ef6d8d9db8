//! Test-only oracles. Nothing here calls the entropy module or the tree caches;
//! markers, volumes and cuts are recounted from the graph's edge list.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use sentree_core::{CodingTree, Graph, NodeId};

/// Vertex set under `id`, found by walking child lists down to leaves.
pub fn scratch_marker(t: &CodingTree, id: NodeId) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![id];
    while let Some(x) = stack.pop() {
        let node = t.node(x);
        match node.leaf_vertex() {
            Some(v) => out.push(v),
            None => stack.extend_from_slice(node.children()),
        }
    }
    out.sort_unstable();
    out
}

/// `(volume, cut)` of a vertex set by direct scan of every edge.
pub fn scratch_stats(g: &Graph, set: &[usize]) -> (usize, usize) {
    let mut inside = vec![false; g.n()];
    for &v in set {
        inside[v] = true;
    }
    let (mut vol, mut cut) = (0, 0);
    for (u, v) in g.edges() {
        match (inside[u], inside[v]) {
            (true, true) => vol += 2,
            (true, false) | (false, true) => {
                vol += 1;
                cut += 1;
            }
            (false, false) => {}
        }
    }
    (vol, cut)
}

/// Structural entropy evaluated term by term from recomputed markers.
pub fn scratch_entropy(g: &Graph, t: &CodingTree) -> f64 {
    let vol_g = (2 * g.edges().count()) as f64;
    let mut total = 0.0;
    let mut stack = vec![t.root()];
    while let Some(id) = stack.pop() {
        let node = t.node(id);
        stack.extend_from_slice(node.children());
        let Some(parent) = node.parent() else {
            continue;
        };
        let (vol, cut) = scratch_stats(g, &scratch_marker(t, id));
        let (parent_vol, _) = scratch_stats(g, &scratch_marker(t, parent));
        if cut == 0 || vol == 0 {
            continue;
        }
        total -= (cut as f64 / vol_g) * (vol as f64 / parent_vol as f64).log2();
    }
    total
}

pub fn connected_random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    loop {
        let g = Graph::erdos_renyi(n, p, rng);
        if g.is_connected() {
            return g;
        }
    }
}

/// Random graph with at least one edge.
pub fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> Graph {
    loop {
        let n = rng.gen_range(2..=max_n);
        let p = rng.gen_range(0.1..0.7);
        let g = Graph::erdos_renyi(n, p, rng);
        if g.edge_count() > 0 {
            return g;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    Merge(NodeId, NodeId),
    Delete(NodeId),
    Shift(NodeId),
}

/// Picks a random edit whose preconditions hold on `t`, if any.
pub fn random_edit<R: Rng>(t: &CodingTree, rng: &mut R) -> Option<Edit> {
    let root_kids = t.children(t.root()).to_vec();
    let internal: Vec<NodeId> = t.internal_nodes().collect();
    let non_root: Vec<NodeId> = t.node_ids().filter(|&id| id != t.root()).collect();
    for _ in 0..8 {
        match rng.gen_range(0..3) {
            0 if root_kids.len() >= 2 => {
                let pair: Vec<&NodeId> = root_kids.choose_multiple(rng, 2).collect();
                return Some(Edit::Merge(*pair[0], *pair[1]));
            }
            1 if !internal.is_empty() => return Some(Edit::Delete(*internal.choose(rng).unwrap())),
            2 if !non_root.is_empty() && t.height() < 12 => {
                return Some(Edit::Shift(*non_root.choose(rng).unwrap()))
            }
            _ => {}
        }
    }
    None
}

pub fn apply(t: &mut CodingTree, g: &Graph, e: Edit) {
    match e {
        Edit::Merge(a, b) => {
            t.merge(g, a, b).unwrap();
        }
        Edit::Delete(v) => t.delete(v).unwrap(),
        Edit::Shift(v) => {
            t.shift(v).unwrap();
        }
    }
}

/// A tree reached from the star by `steps` random edits.
pub fn random_edited_tree<R: Rng>(g: &Graph, steps: usize, rng: &mut R) -> CodingTree {
    let mut t = CodingTree::star(g).unwrap();
    for _ in 0..steps {
        if let Some(e) = random_edit(&t, rng) {
            apply(&mut t, g, e);
        }
    }
    t
}
