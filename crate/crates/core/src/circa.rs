//! Greedy coding-tree construction.
//!
//! Three stages, starting from the star tree:
//!
//! 1. merge root children pairwise, always taking the pair with the largest
//!    entropy reduction, until the root has two children;
//! 2. delete internal nodes, cheapest entropy increase first, until the tree
//!    height is at most `k`;
//! 3. insert single-child nodes so every edge joins adjacent levels, padding
//!    the top if the tree is still shorter than `k`.
//!
//! Only root-child pairs that share at least one edge are merge candidates;
//! any other pair has a zero delta. Pair deltas depend only on the two nodes
//! involved, so heap entries stay valid until one side is merged away.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{
    delete_delta_cached, merge_delta_from_parts, one_dim_entropy, structural_entropy,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::{CodingTree, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircaTrace {
    /// Entropy of the star tree the construction starts from.
    pub initial_entropy: f64,
    /// Entropy change of each stage-1 merge, in order.
    pub stage1_deltas: Vec<f64>,
    /// Entropy change of each stage-2 delete, in order.
    pub stage2_deltas: Vec<f64>,
    /// Tree height at the end of stage 1.
    pub h_max: usize,
    /// Single-child nodes inserted by stage 3, including padding.
    pub stage3_shifts: usize,
    /// Full-width layers added on top because the tree was shorter than `k`.
    pub padding_layers: usize,
    pub final_entropy: f64,
}

fn check_input(g: &Graph, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::ZeroHeight);
    }
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if g.volume() == 0 {
        return Err(Error::EdgelessGraph);
    }
    Ok(())
}

/// Builds a height-`k` coding tree of `g` with low structural entropy.
///
/// The returned tree is layer-aligned, has height exactly `k` and dense node
/// ids (see [`CodingTree::compacted`]).
pub fn circa(g: &Graph, k: usize) -> Result<(CodingTree, CircaTrace)> {
    check_input(g, k)?;
    let initial_entropy = one_dim_entropy(g)?;
    let (mut tree, stage1_deltas) = merge_stage(g)?;
    let h_max = tree.height();
    let stage2_deltas = squeeze_stage(&mut tree, g, k)?;
    let (stage3_shifts, padding_layers) = align_stage(&mut tree, k)?;
    let tree = tree.compacted();
    let final_entropy = structural_entropy(g, &tree)?.total;
    Ok((
        tree,
        CircaTrace {
            initial_entropy,
            stage1_deltas,
            stage2_deltas,
            h_max,
            stage3_shifts,
            padding_layers,
            final_entropy,
        },
    ))
}

#[derive(Debug, Clone, Copy)]
struct MergeCandidate {
    delta: f64,
    key: (usize, usize),
    a: NodeId,
    b: NodeId,
}

impl PartialEq for MergeCandidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MergeCandidate {}

impl PartialOrd for MergeCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MergeCandidate {
    // Max-heap order: most negative delta first, then smallest key.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .delta
            .total_cmp(&self.delta)
            .then_with(|| other.key.cmp(&self.key))
    }
}

fn pair_key(t: &CodingTree, a: NodeId, b: NodeId) -> (usize, usize) {
    let (x, y) = (t.node(a).min_leaf(), t.node(b).min_leaf());
    (x.min(y), x.max(y))
}

/// Stage 1: pairwise merges from the star tree until the root has at most two
/// children. Returns the tree and the delta of every merge.
pub fn merge_stage(g: &Graph) -> Result<(CodingTree, Vec<f64>)> {
    check_input(g, 1)?;
    let mut tree = CodingTree::star(g)?;
    let n = g.n();
    let vol_g = g.volume();

    // Cut sizes between adjacent root children, indexed by node id.
    let mut links: Vec<HashMap<NodeId, usize>> = (0..n)
        .map(|v| {
            g.neighbors(v)
                .iter()
                .map(|&u| (NodeId(u as u32), 1))
                .collect()
        })
        .collect();
    links.push(HashMap::new()); // root
    let mut alive: Vec<bool> = vec![true; n];
    alive.push(false);
    let mut by_min_leaf: BTreeSet<(usize, NodeId)> =
        (0..n).map(|v| (v, NodeId(v as u32))).collect();

    let mut heap = BinaryHeap::with_capacity(g.edge_count());
    for (u, v) in g.edges() {
        let (a, b) = (NodeId(u as u32), NodeId(v as u32));
        heap.push(MergeCandidate {
            delta: merge_delta_from_parts(1, g.degree(u), g.degree(v), vol_g),
            key: (u, v),
            a,
            b,
        });
    }

    let mut deltas = Vec::with_capacity(n.saturating_sub(2));
    let mut remaining = n;
    while remaining > 2 {
        let pick = loop {
            match heap.pop() {
                Some(c) if alive[c.a.index()] && alive[c.b.index()] => break Some(c),
                Some(_) => continue,
                None => break None,
            }
        };
        let (a, b, cut, delta) = match pick {
            Some(c) => (c.a, c.b, links[c.a.index()][&c.b], c.delta),
            None => {
                // No connected pair left: join the two lowest components.
                let mut it = by_min_leaf.iter();
                let (_, a) = *it.next().expect("more than two root children");
                let (_, b) = *it.next().expect("more than two root children");
                (a, b, 0, 0.0)
            }
        };

        let eps = tree.attach_pair(a, b, cut);
        alive[a.index()] = false;
        alive[b.index()] = false;
        alive.push(true);
        by_min_leaf.remove(&(tree.node(a).min_leaf(), a));
        by_min_leaf.remove(&(tree.node(b).min_leaf(), b));
        by_min_leaf.insert((tree.node(eps).min_leaf(), eps));

        let mut la = std::mem::take(&mut links[a.index()]);
        let mut lb = std::mem::take(&mut links[b.index()]);
        if la.len() < lb.len() {
            std::mem::swap(&mut la, &mut lb);
        }
        for (x, c) in lb {
            *la.entry(x).or_insert(0) += c;
        }
        la.remove(&a);
        la.remove(&b);
        let eps_vol = tree.node(eps).volume();
        for (&x, &c) in &la {
            let lx = &mut links[x.index()];
            lx.remove(&a);
            lx.remove(&b);
            lx.insert(eps, c);
            heap.push(MergeCandidate {
                delta: merge_delta_from_parts(c, eps_vol, tree.node(x).volume(), vol_g),
                key: pair_key(&tree, eps, x),
                a: eps,
                b: x,
            });
        }
        links.push(la);
        deltas.push(delta);
        remaining -= 1;
    }

    let survivors: Vec<NodeId> = by_min_leaf.into_iter().map(|(_, id)| id).collect();
    tree.set_root_children(survivors);
    Ok((tree, deltas))
}

#[derive(Debug, Clone, Copy)]
struct DeleteCandidate {
    delta: f64,
    min_leaf: usize,
    node: NodeId,
    version: u32,
}

impl PartialEq for DeleteCandidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DeleteCandidate {}

impl PartialOrd for DeleteCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DeleteCandidate {
    // Max-heap order: smallest delta first, then smallest vertex, then id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .delta
            .total_cmp(&self.delta)
            .then_with(|| other.min_leaf.cmp(&self.min_leaf))
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| self.version.cmp(&other.version))
    }
}

/// Stage 2: delete the internal node with the smallest entropy increase until
/// the tree height is at most `k`. Returns the delta of every delete.
pub fn squeeze_stage(tree: &mut CodingTree, g: &Graph, k: usize) -> Result<Vec<f64>> {
    check_input(g, k)?;
    tree.check_graph(g)?;
    let vol_g = g.volume();
    let mut version: Vec<u32> = Vec::new();
    let mut heap = BinaryHeap::new();

    let push = |heap: &mut BinaryHeap<DeleteCandidate>,
                tree: &CodingTree,
                version: &mut Vec<u32>,
                id: NodeId| {
        if version.len() <= id.index() {
            version.resize(id.index() + 1, 0);
        }
        version[id.index()] += 1;
        heap.push(DeleteCandidate {
            delta: delete_delta_cached(tree, id, vol_g),
            min_leaf: tree.node(id).min_leaf(),
            node: id,
            version: version[id.index()],
        });
    };

    let internal: Vec<NodeId> = tree.internal_nodes().collect();
    for id in internal {
        push(&mut heap, tree, &mut version, id);
    }

    let mut deltas = Vec::new();
    while tree.height() > k {
        let c = loop {
            let c = heap.pop().expect("a tree taller than 1 has internal nodes");
            if tree.contains(c.node) && version[c.node.index()] == c.version {
                break c;
            }
        };
        let parent = tree.parent(c.node).expect("internal node has a parent");
        let moved: Vec<NodeId> = tree.children(c.node).to_vec();
        tree.delete(c.node)?;
        deltas.push(c.delta);
        if parent != tree.root() {
            push(&mut heap, tree, &mut version, parent);
        }
        for m in moved {
            if !tree.node(m).is_leaf() {
                push(&mut heap, tree, &mut version, m);
            }
        }
    }
    Ok(deltas)
}

/// Stage 3: insert single-child nodes until every edge joins adjacent levels,
/// then pad with full-width layers under the root until the height is `k`.
/// Returns (nodes inserted in total, padding layers).
pub fn align_stage(tree: &mut CodingTree, k: usize) -> Result<(usize, usize)> {
    if k == 0 {
        return Err(Error::ZeroHeight);
    }
    let mut shifts = 0;
    let mut queue = std::collections::VecDeque::from([tree.root()]);
    while let Some(id) = queue.pop_front() {
        let parent_height = tree.node(id).height();
        let kids: Vec<NodeId> = tree.children(id).to_vec();
        for mut child in kids {
            let child_height = tree.node(child).height();
            queue.push_back(child);
            for _ in child_height + 1..parent_height {
                child = tree.shift(child)?;
                shifts += 1;
            }
        }
    }
    let mut padding = 0;
    while tree.height() < k {
        let kids: Vec<NodeId> = tree.children(tree.root()).to_vec();
        for c in kids {
            tree.shift(c)?;
            shifts += 1;
        }
        padding += 1;
    }
    Ok((shifts, padding))
}

/// Random-pairing baseline: `k-1` rounds of shuffling the current top nodes
/// and joining neighbours in pairs (an odd node out is carried up unpaired),
/// then alignment to height exactly `k`.
pub fn random_tree(g: &Graph, k: usize, seed: u64) -> Result<CodingTree> {
    check_input(g, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = CodingTree::star(g)?;
    let mut current: Vec<NodeId> = tree.children(tree.root()).to_vec();
    for _ in 1..k {
        if current.len() < 2 {
            break;
        }
        current.shuffle(&mut rng);
        let mut next = Vec::with_capacity(current.len() / 2 + 1);
        for chunk in current.chunks(2) {
            match *chunk {
                [a, b] => {
                    let cut = tree.cut_between(g, a, b);
                    next.push(tree.attach_pair(a, b, cut));
                }
                [a] => next.push(a),
                _ => unreachable!(),
            }
        }
        tree.set_root_children(next.clone());
        current = next;
    }
    align_stage(&mut tree, k)?;
    Ok(tree.compacted())
}
