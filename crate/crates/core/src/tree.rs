//! Coding trees: rooted trees whose leaves biject to graph vertices, with the
//! merge / delete / shift edits used to reshape them.
//!
//! Internal nodes never store their vertex set (marker) explicitly. Each node
//! caches the volume and out-degree of its marker together with its height and
//! the smallest vertex id underneath it; the edits keep these caches exact.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    height: usize,
    volume: usize,
    out_degree: usize,
    min_leaf: usize,
    leaf_vertex: Option<usize>,
    alive: bool,
}

impl TreeNode {
    fn dead() -> Self {
        TreeNode {
            parent: None,
            children: Vec::new(),
            height: 0,
            volume: 0,
            out_degree: 0,
            min_leaf: usize::MAX,
            leaf_vertex: None,
            alive: false,
        }
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    /// Children ordered by smallest descendant vertex id.
    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    /// Length of the longest downward path to a leaf.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum of degrees over the node's marker.
    pub fn volume(&self) -> usize {
        self.volume
    }

    /// Number of edges leaving the node's marker.
    pub fn out_degree(&self) -> usize {
        self.out_degree
    }

    /// Smallest vertex id in the node's marker.
    pub fn min_leaf(&self) -> usize {
        self.min_leaf
    }

    pub fn leaf_vertex(&self) -> Option<usize> {
        self.leaf_vertex
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf_vertex.is_some()
    }
}

/// Nested description of a tree shape, used to build coding trees directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Leaf(usize),
    Node(Vec<Shape>),
}

impl Shape {
    /// A two-level tree: the root's children are the given blocks, each block
    /// holding its vertices as leaves. Singleton blocks become direct leaves.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Shape {
        Shape::Node(
            blocks
                .iter()
                .map(|b| match b.as_slice() {
                    [v] => Shape::Leaf(*v),
                    _ => Shape::Node(b.iter().map(|&v| Shape::Leaf(v)).collect()),
                })
                .collect(),
        )
    }
}

/// A coding tree over a specific graph.
///
/// Leaves created by the constructors in this module use node id = vertex id,
/// and the root of a fresh tree is node `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingTree {
    nodes: Vec<TreeNode>,
    root: NodeId,
    leaf_of: Vec<Option<NodeId>>,
    graph_hash: String,
    graph_n: usize,
    graph_volume: usize,
}

impl CodingTree {
    /// The height-1 tree with every vertex a direct child of the root.
    pub fn star(g: &Graph) -> Result<Self> {
        let n = g.n();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut nodes = Vec::with_capacity(2 * n);
        for v in 0..n {
            let d = g.degree(v);
            nodes.push(TreeNode {
                parent: Some(NodeId(n as u32)),
                children: Vec::new(),
                height: 0,
                volume: d,
                out_degree: d,
                min_leaf: v,
                leaf_vertex: Some(v),
                alive: true,
            });
        }
        nodes.push(TreeNode {
            parent: None,
            children: (0..n as u32).map(NodeId).collect(),
            height: 1,
            volume: g.volume(),
            out_degree: 0,
            min_leaf: 0,
            leaf_vertex: None,
            alive: true,
        });
        Ok(CodingTree {
            nodes,
            root: NodeId(n as u32),
            leaf_of: (0..n as u32).map(|v| Some(NodeId(v))).collect(),
            graph_hash: g.fingerprint(),
            graph_n: n,
            graph_volume: g.volume(),
        })
    }

    /// Builds a tree from a nested shape. The outermost shape must be a
    /// `Shape::Node`; every vertex must appear exactly once.
    pub fn from_shape(g: &Graph, shape: &Shape) -> Result<Self> {
        let n = g.n();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let Shape::Node(top) = shape else {
            return Err(Error::InvalidTree(
                "root shape must be an internal node".into(),
            ));
        };
        let mut nodes = vec![TreeNode::dead(); n + 1];
        let mut leaf_of = vec![None; n];
        let root = NodeId(n as u32);
        nodes[n].alive = true;
        // (shape children, node id)
        let mut stack: Vec<(&[Shape], NodeId)> = vec![(top.as_slice(), root)];
        while let Some((kids, id)) = stack.pop() {
            for kid in kids {
                let child = match kid {
                    Shape::Leaf(v) => {
                        if *v >= n {
                            return Err(Error::VertexOutOfRange { vertex: *v, n });
                        }
                        if leaf_of[*v].is_some() {
                            return Err(Error::InvalidTree(format!("vertex {v} appears twice")));
                        }
                        let cid = NodeId(*v as u32);
                        leaf_of[*v] = Some(cid);
                        nodes[*v].alive = true;
                        nodes[*v].leaf_vertex = Some(*v);
                        cid
                    }
                    Shape::Node(grand) => {
                        let cid = NodeId(nodes.len() as u32);
                        let mut node = TreeNode::dead();
                        node.alive = true;
                        nodes.push(node);
                        stack.push((grand.as_slice(), cid));
                        cid
                    }
                };
                nodes[child.index()].parent = Some(id);
                nodes[id.index()].children.push(child);
            }
        }
        let mut tree = CodingTree {
            nodes,
            root,
            leaf_of,
            graph_hash: g.fingerprint(),
            graph_n: n,
            graph_volume: g.volume(),
        };
        tree.recompute_caches(g);
        match tree.validate(g) {
            ValidationReport::Pass => Ok(tree),
            fail => Err(Error::InvalidTree(fail.to_string())),
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Height of the whole tree (height of the root).
    pub fn height(&self) -> usize {
        self.nodes[self.root.index()].height
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&TreeNode> {
        self.nodes.get(id.index()).filter(|n| n.alive)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.get(id).is_some()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    /// Leaf node holding vertex `v`.
    pub fn leaf(&self, v: usize) -> Option<NodeId> {
        self.leaf_of.get(v).copied().flatten()
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    pub fn graph_volume(&self) -> usize {
        self.graph_volume
    }

    pub fn leaf_count(&self) -> usize {
        self.graph_n
    }

    /// Ids of all live nodes, ascending.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive)
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    /// Live nodes that are neither the root nor a leaf.
    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids()
            .filter(move |&id| id != self.root && !self.nodes[id.index()].is_leaf())
    }

    /// Number of edges from the root down to `id`.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.nodes[cur.index()].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Vertices in the marker of `id`, ascending.
    pub fn marker(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            let node = &self.nodes[x.index()];
            if let Some(v) = node.leaf_vertex {
                out.push(v);
            }
            stack.extend(node.children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    pub(crate) fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.n() != self.graph_n || g.volume() != self.graph_volume {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    fn live(&self, id: NodeId) -> Result<&TreeNode> {
        self.get(id).ok_or(Error::UnknownNode(id))
    }

    /// Number of edges between the markers of two disjoint nodes.
    pub fn cut_between(&self, g: &Graph, a: NodeId, b: NodeId) -> usize {
        let (small, large) = if self.nodes[a.index()].volume <= self.nodes[b.index()].volume {
            (a, b)
        } else {
            (b, a)
        };
        let other: HashSet<usize> = self.marker(large).into_iter().collect();
        self.marker(small)
            .into_iter()
            .map(|v| g.neighbors(v).iter().filter(|u| other.contains(u)).count())
            .sum()
    }

    /// Creates the parent of two root children without touching the root's
    /// child list. The caller is responsible for fixing the root afterwards
    /// (see [`CodingTree::set_root_children`]).
    pub(crate) fn attach_pair(&mut self, vi: NodeId, vj: NodeId, cut: usize) -> NodeId {
        let (a, b) = (&self.nodes[vi.index()], &self.nodes[vj.index()]);
        let mut children = vec![vi, vj];
        if b.min_leaf < a.min_leaf {
            children.swap(0, 1);
        }
        let node = TreeNode {
            parent: Some(self.root),
            children,
            height: a.height.max(b.height) + 1,
            volume: a.volume + b.volume,
            out_degree: a.out_degree + b.out_degree - 2 * cut,
            min_leaf: a.min_leaf.min(b.min_leaf),
            leaf_vertex: None,
            alive: true,
        };
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.nodes[vi.index()].parent = Some(id);
        self.nodes[vj.index()].parent = Some(id);
        id
    }

    /// Replaces the root's child list and recomputes the root height.
    pub(crate) fn set_root_children(&mut self, mut kids: Vec<NodeId>) {
        kids.sort_by_key(|&k| self.nodes[k.index()].min_leaf);
        let h = kids
            .iter()
            .map(|k| self.nodes[k.index()].height)
            .max()
            .map_or(0, |h| h + 1);
        let root = &mut self.nodes[self.root.index()];
        root.children = kids;
        root.height = h;
    }

    /// Inserts a new node under the root whose children are `vi` and `vj`.
    pub fn merge(&mut self, g: &Graph, vi: NodeId, vj: NodeId) -> Result<NodeId> {
        self.check_graph(g)?;
        if vi == vj {
            return Err(Error::SelfMerge(vi));
        }
        for v in [vi, vj] {
            if self.live(v)?.parent != Some(self.root) {
                return Err(Error::NotRootChild(v));
            }
        }
        let cut = self.cut_between(g, vi, vj);
        let eps = self.attach_pair(vi, vj, cut);
        let eps_min = self.nodes[eps.index()].min_leaf;
        let eps_height = self.nodes[eps.index()].height;
        let mut kids: Vec<NodeId> = self.nodes[self.root.index()]
            .children
            .iter()
            .copied()
            .filter(|&c| c != vi && c != vj)
            .collect();
        let pos = kids.partition_point(|k| self.nodes[k.index()].min_leaf < eps_min);
        kids.insert(pos, eps);
        let root = &mut self.nodes[self.root.index()];
        root.children = kids;
        root.height = root.height.max(eps_height + 1);
        Ok(eps)
    }

    /// Removes an internal node, handing its children to its parent.
    pub fn delete(&mut self, v: NodeId) -> Result<()> {
        let node = self.live(v)?;
        if v == self.root {
            return Err(Error::IsRoot(v));
        }
        if node.is_leaf() {
            return Err(Error::IsLeaf(v));
        }
        let parent = node.parent.expect("non-root node has a parent");
        let moved = std::mem::take(&mut self.nodes[v.index()].children);
        for &c in &moved {
            self.nodes[c.index()].parent = Some(parent);
        }
        let mut siblings = std::mem::take(&mut self.nodes[parent.index()].children);
        let pos = siblings
            .iter()
            .position(|&c| c == v)
            .expect("child listed under parent");
        siblings.splice(pos..=pos, moved);
        siblings.sort_by_key(|&c| self.nodes[c.index()].min_leaf);
        self.nodes[parent.index()].children = siblings;
        self.nodes[v.index()] = TreeNode::dead();
        self.refresh_heights_from(parent);
        Ok(())
    }

    /// Inserts a single-child node between `vi` and its parent. The new node
    /// has the same marker as `vi`.
    pub fn shift(&mut self, vi: NodeId) -> Result<NodeId> {
        let node = self.live(vi)?;
        let Some(parent) = node.parent else {
            return Err(Error::IsRoot(vi));
        };
        let eps = NodeId(self.nodes.len() as u32);
        let new = TreeNode {
            parent: Some(parent),
            children: vec![vi],
            height: node.height + 1,
            volume: node.volume,
            out_degree: node.out_degree,
            min_leaf: node.min_leaf,
            leaf_vertex: None,
            alive: true,
        };
        let mut need = new.height + 1;
        self.nodes.push(new);
        self.nodes[vi.index()].parent = Some(eps);
        for c in self.nodes[parent.index()].children.iter_mut() {
            if *c == vi {
                *c = eps;
            }
        }
        // Heights can only grow here.
        let mut cur = Some(parent);
        while let Some(id) = cur {
            let node = &mut self.nodes[id.index()];
            if node.height >= need {
                break;
            }
            node.height = need;
            need += 1;
            cur = node.parent;
        }
        Ok(eps)
    }

    fn refresh_heights_from(&mut self, start: NodeId) {
        let mut cur = Some(start);
        while let Some(id) = cur {
            let h = self.nodes[id.index()]
                .children
                .iter()
                .map(|c| self.nodes[c.index()].height + 1)
                .max()
                .unwrap_or(0);
            if h == self.nodes[id.index()].height && id != start {
                break;
            }
            self.nodes[id.index()].height = h;
            cur = self.nodes[id.index()].parent;
        }
    }

    /// Live nodes in post-order (children before parents).
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                for &c in self.nodes[id.index()].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Recomputes every cache from the graph and the parent/child structure.
    fn recompute_caches(&mut self, g: &Graph) {
        let order = self.post_order();
        // Edges internal to a node are those whose endpoints' lowest common
        // ancestor lies in the node's subtree.
        let mut depth = vec![0usize; self.nodes.len()];
        for &id in order.iter().rev() {
            if let Some(p) = self.nodes[id.index()].parent {
                depth[id.index()] = depth[p.index()] + 1;
            }
        }
        let mut internal = vec![0usize; self.nodes.len()];
        for (u, v) in g.edges() {
            let (Some(mut a), Some(mut b)) = (self.leaf(u), self.leaf(v)) else {
                continue;
            };
            while a != b {
                if depth[a.index()] >= depth[b.index()] {
                    a = self.nodes[a.index()].parent.expect("walk stays below root");
                } else {
                    b = self.nodes[b.index()].parent.expect("walk stays below root");
                }
            }
            internal[a.index()] += 1;
        }
        for &id in &order {
            let idx = id.index();
            if let Some(v) = self.nodes[idx].leaf_vertex {
                let d = g.degree(v);
                let node = &mut self.nodes[idx];
                node.volume = d;
                node.out_degree = d;
                node.height = 0;
                node.min_leaf = v;
                continue;
            }
            let (mut vol, mut height, mut min_leaf, mut inner) = (0, 0, usize::MAX, internal[idx]);
            for &c in &self.nodes[idx].children {
                let child = &self.nodes[c.index()];
                vol += child.volume;
                height = height.max(child.height + 1);
                min_leaf = min_leaf.min(child.min_leaf);
                inner += internal[c.index()];
            }
            internal[idx] = inner;
            let mut kids = std::mem::take(&mut self.nodes[idx].children);
            kids.sort_by_key(|&c| self.nodes[c.index()].min_leaf);
            self.nodes[idx].children = kids;
            let node = &mut self.nodes[idx];
            node.volume = vol;
            node.out_degree = vol - 2 * inner;
            node.height = height;
            node.min_leaf = min_leaf;
        }
    }

    /// Checks coding-tree properties and cache consistency against `g`.
    pub fn validate(&self, g: &Graph) -> ValidationReport {
        validate::run(self, g)
    }

    /// True when every edge joins a node to a parent exactly one level up.
    pub fn is_aligned(&self) -> bool {
        self.misaligned_node().is_none()
    }

    fn misaligned_node(&self) -> Option<NodeId> {
        self.node_ids()
            .find(|&id| match self.nodes[id.index()].parent {
                Some(p) => self.nodes[p.index()].height != self.nodes[id.index()].height + 1,
                None => false,
            })
    }

    /// Node ids grouped by level (height), each level ordered by smallest
    /// descendant vertex. Level 0 is therefore ordered by vertex id.
    pub fn levels(&self) -> Result<Vec<Vec<NodeId>>> {
        if let Some(bad) = self.misaligned_node() {
            return Err(Error::NotAligned(bad));
        }
        let mut levels = vec![Vec::new(); self.height() + 1];
        for id in self.node_ids() {
            levels[self.nodes[id.index()].height].push(id);
        }
        for level in &mut levels {
            level.sort_by_key(|&id| self.nodes[id.index()].min_leaf);
        }
        Ok(levels)
    }

    /// Copy with dense node ids: leaves `0..n` by vertex, the root at `n`,
    /// then internal nodes in breadth-first order.
    pub fn compacted(&self) -> CodingTree {
        let n = self.graph_n;
        let mut remap = vec![None; self.nodes.len()];
        for v in 0..n {
            if let Some(l) = self.leaf(v) {
                remap[l.index()] = Some(NodeId(v as u32));
            }
        }
        remap[self.root.index()] = Some(NodeId(n as u32));
        let mut next = n as u32 + 1;
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            for &c in &self.nodes[id.index()].children {
                if remap[c.index()].is_none() {
                    remap[c.index()] = Some(NodeId(next));
                    next += 1;
                }
                queue.push_back(c);
            }
        }
        let mut nodes = vec![TreeNode::dead(); next as usize];
        for (old, node) in self.nodes.iter().enumerate() {
            if !node.alive {
                continue;
            }
            let Some(new) = remap[old] else { continue };
            let mut copy = node.clone();
            copy.parent = node
                .parent
                .map(|p| remap[p.index()].expect("parent is live"));
            copy.children = node
                .children
                .iter()
                .map(|c| remap[c.index()].expect("child is live"))
                .collect();
            nodes[new.index()] = copy;
        }
        CodingTree {
            nodes,
            root: NodeId(n as u32),
            leaf_of: (0..n)
                .map(|v| self.leaf(v).map(|_| NodeId(v as u32)))
                .collect(),
            graph_hash: self.graph_hash.clone(),
            graph_n: n,
            graph_volume: self.graph_volume,
        }
    }

    pub fn to_doc(&self) -> TreeDoc {
        TreeDoc {
            nodes: self
                .node_ids()
                .map(|id| {
                    let n = &self.nodes[id.index()];
                    NodeDoc {
                        id: id.0,
                        parent: n.parent.map(|p| p.0),
                        children: n.children.iter().map(|c| c.0).collect(),
                        height: n.height,
                        volume: n.volume,
                        out_degree: n.out_degree,
                        leaf_vertex: n.leaf_vertex,
                    }
                })
                .collect(),
            root: self.root.0,
            graph_hash: self.graph_hash.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("tree document serializes")
    }

    /// Rebuilds a tree from its document form. Stored caches must agree with
    /// `g`, and the result must pass validation.
    pub fn from_doc(doc: &TreeDoc, g: &Graph) -> Result<Self> {
        if doc.graph_hash != g.fingerprint() {
            return Err(Error::GraphMismatch);
        }
        let n = g.n();
        let size = doc
            .nodes
            .iter()
            .map(|nd| nd.id as usize + 1)
            .max()
            .unwrap_or(0);
        let mut nodes = vec![TreeNode::dead(); size.max(doc.root as usize + 1)];
        let mut leaf_of = vec![None; n];
        for nd in &doc.nodes {
            let slot = &mut nodes[nd.id as usize];
            if slot.alive {
                return Err(Error::InvalidTree(format!("duplicate node id {}", nd.id)));
            }
            for &r in nd.children.iter().chain(nd.parent.iter()) {
                if r as usize >= size {
                    return Err(Error::InvalidTree(format!(
                        "node {} references unknown node {r}",
                        nd.id
                    )));
                }
            }
            *slot = TreeNode {
                parent: nd.parent.map(NodeId),
                children: nd.children.iter().copied().map(NodeId).collect(),
                height: nd.height,
                volume: nd.volume,
                out_degree: nd.out_degree,
                min_leaf: usize::MAX,
                leaf_vertex: nd.leaf_vertex,
                alive: true,
            };
            if let Some(v) = nd.leaf_vertex {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
                if leaf_of[v].replace(NodeId(nd.id)).is_some() {
                    return Err(Error::InvalidTree(format!("vertex {v} has two leaves")));
                }
            }
        }
        if !nodes[doc.root as usize].alive {
            return Err(Error::InvalidTree("root node missing".into()));
        }
        let mut tree = CodingTree {
            nodes,
            root: NodeId(doc.root),
            leaf_of,
            graph_hash: doc.graph_hash.clone(),
            graph_n: n,
            graph_volume: g.volume(),
        };
        if let Some(msg) = validate::structure(&tree) {
            return Err(Error::InvalidTree(msg.to_string()));
        }
        for id in tree.post_order() {
            let idx = id.index();
            let min = match tree.nodes[idx].leaf_vertex {
                Some(v) => v,
                None => tree.nodes[idx]
                    .children
                    .iter()
                    .map(|c| tree.nodes[c.index()].min_leaf)
                    .min()
                    .unwrap_or(usize::MAX),
            };
            tree.nodes[idx].min_leaf = min;
        }
        match tree.validate(g) {
            ValidationReport::Pass => Ok(tree),
            fail => Err(Error::InvalidTree(fail.to_string())),
        }
    }

    pub fn from_json(text: &str, g: &Graph) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc, g)
    }
}

/// Serialized form of a coding tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub nodes: Vec<NodeDoc>,
    pub root: u32,
    pub graph_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u32,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    pub height: usize,
    pub volume: usize,
    pub out_degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_vertex: Option<usize>,
}

/// Which coding-tree requirement a validation failure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// Parent/child links are inconsistent, cyclic, or disconnected.
    Structure,
    /// Every node carries a non-empty vertex set.
    NonEmpty,
    /// The root carries the whole vertex set.
    RootCoversGraph,
    /// Children of a node partition the node's vertex set.
    ChildrenPartition,
    /// Leaves are singletons in bijection with the vertices.
    LeafBijection,
    /// Cached height, volume, out-degree or ordering disagree with a recount.
    Cache,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Property::Structure => "structure",
            Property::NonEmpty => "non-empty marker (i)",
            Property::RootCoversGraph => "root covers graph (ii)",
            Property::ChildrenPartition => "children partition parent (iii)",
            Property::LeafBijection => "leaf bijection (iv)",
            Property::Cache => "cache consistency",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationReport {
    Pass,
    Fail {
        property: Property,
        node: Option<NodeId>,
        detail: String,
    },
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        matches!(self, ValidationReport::Pass)
    }

    pub fn property(&self) -> Option<Property> {
        match self {
            ValidationReport::Pass => None,
            ValidationReport::Fail { property, .. } => Some(*property),
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationReport::Pass => f.write_str("pass"),
            ValidationReport::Fail {
                property,
                node,
                detail,
            } => {
                write!(f, "{property} violated")?;
                if let Some(id) = node {
                    write!(f, " at node {id}")?;
                }
                write!(f, ": {detail}")
            }
        }
    }
}

mod validate {
    use super::*;

    fn fail(property: Property, node: Option<NodeId>, detail: String) -> ValidationReport {
        ValidationReport::Fail {
            property,
            node,
            detail,
        }
    }

    /// Parent links agree with child lists, and every live node is reached
    /// exactly once from the root.
    pub(super) fn structure(t: &CodingTree) -> Option<ValidationReport> {
        let root = t.get(t.root)?;
        if root.parent.is_some() {
            return Some(fail(
                Property::Structure,
                Some(t.root),
                "root has a parent".into(),
            ));
        }
        let mut seen = vec![false; t.nodes.len()];
        seen[t.root.index()] = true;
        let mut stack = vec![t.root];
        while let Some(id) = stack.pop() {
            for &c in &t.nodes[id.index()].children {
                let Some(child) = t.get(c) else {
                    return Some(fail(
                        Property::Structure,
                        Some(id),
                        format!("child {c} is not a live node"),
                    ));
                };
                if child.parent != Some(id) {
                    return Some(fail(
                        Property::Structure,
                        Some(c),
                        format!("parent link does not point to {id}"),
                    ));
                }
                if std::mem::replace(&mut seen[c.index()], true) {
                    return Some(fail(
                        Property::Structure,
                        Some(c),
                        "node reached twice".into(),
                    ));
                }
                stack.push(c);
            }
        }
        t.node_ids().find(|id| !seen[id.index()]).map(|id| {
            fail(
                Property::Structure,
                Some(id),
                "node unreachable from root".into(),
            )
        })
    }

    pub(super) fn run(t: &CodingTree, g: &Graph) -> ValidationReport {
        if !t.contains(t.root) {
            return fail(Property::Structure, None, "root node missing".into());
        }
        if t.graph_n != g.n() || t.graph_volume != g.volume() || t.graph_hash != g.fingerprint() {
            return fail(
                Property::Structure,
                None,
                "tree belongs to a different graph".into(),
            );
        }
        if let Some(report) = structure(t) {
            return report;
        }
        let order = t.post_order();
        let n = g.n();

        // Markers as sorted vertex lists, children before parents.
        let mut markers: Vec<Vec<usize>> = vec![Vec::new(); t.nodes.len()];
        for &id in &order {
            let node = &t.nodes[id.index()];
            if let Some(v) = node.leaf_vertex {
                if !node.children.is_empty() {
                    return fail(
                        Property::LeafBijection,
                        Some(id),
                        "leaf has children".into(),
                    );
                }
                if v >= n {
                    return fail(
                        Property::LeafBijection,
                        Some(id),
                        format!("vertex {v} out of range"),
                    );
                }
                markers[id.index()] = vec![v];
                continue;
            }
            let mut merged: Vec<usize> = Vec::new();
            for &c in &node.children {
                merged.extend_from_slice(&markers[c.index()]);
            }
            merged.sort_unstable();
            if merged.is_empty() {
                return fail(
                    Property::NonEmpty,
                    Some(id),
                    "node has no descendant leaves".into(),
                );
            }
            if let Some(w) = merged.windows(2).find(|w| w[0] == w[1]) {
                return fail(
                    Property::ChildrenPartition,
                    Some(id),
                    format!("vertex {} appears under two children", w[0]),
                );
            }
            markers[id.index()] = merged;
        }

        for v in 0..n {
            match t.leaf(v) {
                Some(l) if t.get(l).and_then(|x| x.leaf_vertex) == Some(v) => {}
                _ => {
                    return fail(
                        Property::LeafBijection,
                        None,
                        format!("vertex {v} has no leaf"),
                    );
                }
            }
        }
        if markers[t.root.index()] != (0..n).collect::<Vec<_>>() {
            return fail(
                Property::RootCoversGraph,
                Some(t.root),
                "root marker differs from vertex set".into(),
            );
        }

        for &id in &order {
            let node = &t.nodes[id.index()];
            let stats = g
                .subset_stats(&markers[id.index()])
                .expect("marker vertices are in range");
            let height = node
                .children
                .iter()
                .map(|c| t.nodes[c.index()].height + 1)
                .max()
                .unwrap_or(0);
            let sorted = node
                .children
                .windows(2)
                .all(|w| t.nodes[w[0].index()].min_leaf < t.nodes[w[1].index()].min_leaf);
            let mismatch = if node.volume != stats.volume {
                Some(format!("volume {} != {}", node.volume, stats.volume))
            } else if node.out_degree != stats.cut {
                Some(format!("out-degree {} != {}", node.out_degree, stats.cut))
            } else if node.height != height {
                Some(format!("height {} != {}", node.height, height))
            } else if node.min_leaf != markers[id.index()][0] {
                Some("smallest-vertex cache stale".into())
            } else if !sorted {
                Some("children not ordered by smallest vertex".into())
            } else {
                None
            };
            if let Some(detail) = mismatch {
                return fail(Property::Cache, Some(id), detail);
            }
        }
        ValidationReport::Pass
    }
}
