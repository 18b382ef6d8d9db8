//! Undirected, unweighted simple graphs and the degree/volume/cut primitives
//! that every structural-entropy quantity is built from.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An undirected simple graph over dense vertex ids `0..n`.
///
/// Immutable after construction. Neighbor lists are sorted and symmetric,
/// there are no self-loops and no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    names: Option<Vec<String>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an explicit edge list. Duplicate edges (in either
    /// orientation) collapse into one.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoopVertex(u));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        Ok(Self::from_sets(sets, None))
    }

    fn from_sets(sets: Vec<BTreeSet<usize>>, names: Option<Vec<String>>) -> Self {
        let adjacency: Vec<Vec<usize>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Graph {
            adjacency,
            names,
            edge_count,
        }
    }

    /// Parses a whitespace-separated edge list, one edge per line.
    ///
    /// Lines starting with `#` and blank lines are skipped. Vertex tokens are
    /// assigned dense ids in order of first appearance.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut interner = Interner::default();
        let mut sets: Vec<BTreeSet<usize>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected 2 vertex tokens, found {}", tokens.len()),
                });
            }
            if tokens[0] == tokens[1] {
                return Err(Error::SelfLoop {
                    line: line_no,
                    token: tokens[0].to_string(),
                });
            }
            let u = interner.intern(tokens[0]);
            let v = interner.intern(tokens[1]);
            sets.resize_with(interner.len(), BTreeSet::new);
            sets[u].insert(v);
            sets[v].insert(u);
        }
        sets.resize_with(interner.len(), BTreeSet::new);
        Ok(Self::from_sets(sets, Some(interner.names)))
    }

    /// Attaches vertex names. `names.len()` must equal the vertex count.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(Error::Shape {
                context: "vertex names",
                expected: self.n().to_string(),
                actual: names.len().to_string(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Sum of all degrees, `2·|E|`.
    pub fn volume(&self) -> usize {
        2 * self.edge_count
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn name(&self, v: usize) -> Option<&str> {
        self.names.as_ref().map(|names| names[v].as_str())
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Display label: the vertex name if present, otherwise the numeric id.
    pub fn label(&self, v: usize) -> String {
        self.name(v).map_or_else(|| v.to_string(), str::to_string)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names.as_ref()?.iter().position(|s| s == name)
    }

    /// Hex digest identifying the graph's vertex count and edge set
    /// (names are ignored).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        for (u, v) in self.edges() {
            hasher.update((u as u64).to_le_bytes());
            hasher.update((v as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Volume and cut of a vertex subset. Duplicate ids in `s` are ignored.
    pub fn subset_stats(&self, s: &[usize]) -> Result<VertexSubset> {
        let n = self.n();
        let mut inside = vec![false; n];
        for &v in s {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            inside[v] = true;
        }
        let members: Vec<usize> = (0..n).filter(|&v| inside[v]).collect();
        let mut volume = 0;
        let mut cut = 0;
        for &v in &members {
            volume += self.degree(v);
            cut += self.adjacency[v].iter().filter(|&&u| !inside[u]).count();
        }
        Ok(VertexSubset {
            members,
            volume,
            cut,
        })
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_edges(n, &edges).expect("complete graph edges are valid")
    }

    /// Path `0 - 1 - ... - n-1`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::from_edges(n, &edges).expect("path edges are valid")
    }

    /// Cycle on `n ≥ 3` vertices.
    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("cycle edges are valid")
    }

    /// Erdős–Rényi `G(n, p)`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self::from_edges(n, &edges).expect("sampled edges are valid")
    }

    /// Uniform random simple graph with `n` vertices and (up to) `m` edges.
    pub fn random_with_edges<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let max = n * n.saturating_sub(1) / 2;
        let m = m.min(max);
        let mut seen = std::collections::HashSet::with_capacity(m);
        let mut edges = Vec::with_capacity(m);
        while edges.len() < m {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                edges.push(key);
            }
        }
        Self::from_edges(n, &edges).expect("sampled edges are valid")
    }

    /// Connected components as sorted vertex lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &u in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.components().len() == 1
    }
}

/// A vertex subset together with its volume and cut size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSubset {
    /// Sorted, deduplicated member ids.
    pub members: Vec<usize>,
    /// Sum of member degrees.
    pub volume: usize,
    /// Edges with exactly one endpoint among the members.
    pub cut: usize,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, usize>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.names.len();
        self.ids.insert(token.to_string(), id);
        self.names.push(token.to_string());
        id
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// A label hierarchy read from a taxonomy file.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    /// Undirected label graph; edge direction is discarded.
    pub graph: Graph,
    /// Vertex id of the hierarchy root (first token of the first line).
    pub root: usize,
    /// Directed parent lists per vertex, sorted.
    pub parents: Vec<Vec<usize>>,
    /// Non-fatal findings: multi-parent labels and labels unreachable from the root.
    pub warnings: Vec<String>,
}

impl Taxonomy {
    /// Parses `parent child child …` lines (tab- or space-separated).
    pub fn parse(text: &str) -> Result<Self> {
        let mut interner = Interner::default();
        let mut children: Vec<BTreeSet<usize>> = Vec::new();
        let mut root = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let parent_tok = tokens.next().expect("non-empty line has a token");
            let child_toks: Vec<&str> = tokens.collect();
            if child_toks.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("parent `{parent_tok}` lists no children"),
                });
            }
            let parent = interner.intern(parent_tok);
            root.get_or_insert(parent);
            for tok in child_toks {
                if tok == parent_tok {
                    return Err(Error::SelfLoop {
                        line: line_no,
                        token: tok.to_string(),
                    });
                }
                let child = interner.intern(tok);
                children.resize_with(interner.len(), BTreeSet::new);
                children[parent].insert(child);
            }
        }
        let n = interner.len();
        children.resize_with(n, BTreeSet::new);

        let mut parents = vec![Vec::new(); n];
        for (p, cs) in children.iter().enumerate() {
            for &c in cs {
                parents[c].push(p);
            }
        }
        for ps in &mut parents {
            ps.sort_unstable();
        }

        if let Some(v) = find_directed_cycle(&children) {
            return Err(Error::TaxonomyCycle(interner.names[v].clone()));
        }

        let mut warnings = Vec::new();
        for (v, ps) in parents.iter().enumerate() {
            if ps.len() > 1 {
                let names: Vec<&str> = ps.iter().map(|&p| interner.names[p].as_str()).collect();
                warnings.push(format!(
                    "label `{}` has {} parents: {}",
                    interner.names[v],
                    ps.len(),
                    names.join(", ")
                ));
            }
        }

        let mut sets = vec![BTreeSet::new(); n];
        for (p, cs) in children.iter().enumerate() {
            for &c in cs {
                sets[p].insert(c);
                sets[c].insert(p);
            }
        }
        let graph = Graph::from_sets(sets, Some(interner.names.clone()));
        let root = root.unwrap_or(0);
        let mut tax = Taxonomy {
            graph,
            root,
            parents,
            warnings,
        };
        if n > 0 {
            let depths = tax.depths();
            let unreachable: Vec<&str> = depths
                .iter()
                .enumerate()
                .filter(|(_, d)| d.is_none())
                .map(|(v, _)| interner.names[v].as_str())
                .collect();
            if !unreachable.is_empty() {
                let shown: Vec<&str> = unreachable.iter().take(10).copied().collect();
                tax.warnings.push(format!(
                    "{} label(s) unreachable from root `{}` (first: {})",
                    unreachable.len(),
                    interner.names[root],
                    shown.join(", ")
                ));
            }
        }
        Ok(tax)
    }

    /// Longest directed distance from the root per vertex; `None` when unreachable.
    pub fn depths(&self) -> Vec<Option<usize>> {
        let n = self.graph.n();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        // Topological order restricted to the root's descendants.
        let mut order = Vec::new();
        let mut state = vec![0u8; n];
        let mut stack = vec![(self.root, 0usize)];
        state[self.root] = 1;
        while let Some((v, i)) = stack.pop() {
            if i < children[v].len() {
                stack.push((v, i + 1));
                let c = children[v][i];
                if state[c] == 0 {
                    state[c] = 1;
                    stack.push((c, 0));
                }
            } else {
                order.push(v);
            }
        }
        let mut depth = vec![None; n];
        depth[self.root] = Some(0);
        for &v in order.iter().rev() {
            if let Some(d) = depth[v] {
                for &c in &children[v] {
                    depth[c] = Some(depth[c].map_or(d + 1, |old: usize| old.max(d + 1)));
                }
            }
        }
        depth
    }

    /// Maximum label depth below the root.
    pub fn depth(&self) -> usize {
        self.depths().into_iter().flatten().max().unwrap_or(0)
    }

    /// Number of labels, i.e. vertices other than the hierarchy root.
    pub fn label_count(&self) -> usize {
        self.graph.n().saturating_sub(1)
    }

    /// The label graph with the root vertex removed and ids compacted.
    pub fn without_root(&self) -> Graph {
        let n = self.graph.n();
        let remap = |v: usize| if v > self.root { v - 1 } else { v };
        let mut sets = vec![BTreeSet::new(); n.saturating_sub(1)];
        for (u, v) in self.graph.edges() {
            if u != self.root && v != self.root {
                sets[remap(u)].insert(remap(v));
                sets[remap(v)].insert(remap(u));
            }
        }
        let names = self.graph.names().map(|names| {
            names
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != self.root)
                .map(|(_, s)| s.clone())
                .collect()
        });
        Graph::from_sets(sets, names)
    }
}

fn find_directed_cycle(children: &[BTreeSet<usize>]) -> Option<usize> {
    let n = children.len();
    let adj: Vec<Vec<usize>> = children
        .iter()
        .map(|s| s.iter().copied().collect())
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let c = adj[v][*i];
                *i += 1;
                match state[c] {
                    0 => {
                        state[c] = 1;
                        stack.push((c, 0));
                    }
                    1 => return Some(c),
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Parses an HTC-style taxonomy into its undirected label graph.
pub fn from_taxonomy(text: &str) -> Result<Taxonomy> {
    Taxonomy::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_assigns_ids_in_first_appearance_order() {
        let g = Graph::from_edge_list("a b\nb c").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert_eq!(g.name(2), Some("c"));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::from_edge_list("a b\nb a\n# comment\n\na b").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.volume(), 2);
    }

    #[test]
    fn self_loop_rejected_with_line() {
        let err = Graph::from_edge_list("# header\na a").unwrap_err();
        assert_eq!(
            err,
            Error::SelfLoop {
                line: 2,
                token: "a".into()
            }
        );
    }

    #[test]
    fn empty_input_is_empty_graph() {
        let g = Graph::from_edge_list("").unwrap();
        assert_eq!(g.n(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(
            Graph::from_edge_list("a b c"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn taxonomy_small() {
        let t = from_taxonomy("Root A B\nA A1 A2").unwrap();
        let g = &t.graph;
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 4);
        let deg = |s: &str| g.degree(g.id_of(s).unwrap());
        assert_eq!(
            [deg("Root"), deg("A"), deg("B"), deg("A1"), deg("A2")],
            [2, 3, 1, 1, 1]
        );
        assert_eq!(t.depth(), 2);
        assert!(t.warnings.is_empty());
        assert_eq!(g.name(t.root), Some("Root"));
    }

    #[test]
    fn taxonomy_cycle_rejected() {
        assert!(matches!(
            from_taxonomy("Root A\nA Root"),
            Err(Error::TaxonomyCycle(_))
        ));
    }

    #[test]
    fn taxonomy_multi_parent_warns() {
        let t = from_taxonomy("Root A B\nA C\nB C").unwrap();
        assert_eq!(t.graph.edge_count(), 4);
        assert_eq!(t.warnings.len(), 1);
        assert!(t.warnings[0].contains("`C`"));
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn taxonomy_tabs_and_duplicates() {
        let t = from_taxonomy("Root\tA\tB\nRoot\tA\nA\tA1").unwrap();
        assert_eq!(t.graph.edge_count(), 3);
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn taxonomy_without_root() {
        let t = from_taxonomy("Root A B\nA A1 A2").unwrap();
        let g = t.without_root();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(t.label_count(), 4);
    }

    #[test]
    fn subset_stats_examples() {
        let k3 = Graph::complete(3);
        let s = k3.subset_stats(&[0, 1]).unwrap();
        assert_eq!((s.volume, s.cut), (4, 2));
        let all = k3.subset_stats(&[0, 1, 2]).unwrap();
        assert_eq!((all.volume, all.cut), (k3.volume(), 0));
        let p3 = Graph::path(3);
        let s = p3.subset_stats(&[0, 2]).unwrap();
        assert_eq!((s.volume, s.cut), (2, 2));
        assert!(matches!(
            p3.subset_stats(&[3]),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
    }

    #[test]
    fn fingerprint_ignores_names() {
        let a = Graph::from_edge_list("x y\ny z").unwrap();
        let b = Graph::path(3);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), Graph::complete(3).fingerprint());
    }
}
