//! Exhaustive minimum of structural entropy over all coding trees of bounded
//! height. Only usable on tiny graphs; it exists to check heuristics against.

use crate::entropy::node_term;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::{CodingTree, Shape};

/// Largest vertex count accepted for a given height bound (`k ≥ 2`).
pub fn oracle_cap(k: usize) -> usize {
    if k <= 2 {
        8
    } else {
        6
    }
}

/// All set partitions of `0..m`, generated as restricted growth strings.
///
/// Blocks are listed in order of their smallest element, and elements within a
/// block ascend.
pub struct SetPartitions {
    codes: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl SetPartitions {
    pub fn new(m: usize) -> Self {
        SetPartitions {
            codes: vec![0; m],
            maxes: vec![0; m],
            done: false,
        }
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let m = self.codes.len();
        let blocks = self.codes.iter().max().map_or(0, |&b| b + 1);
        let mut out = vec![Vec::new(); blocks];
        for (i, &c) in self.codes.iter().enumerate() {
            out[c].push(i);
        }
        // Advance: rightmost position that may still grow.
        let mut i = m;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.codes[i] <= self.maxes[i - 1] {
                self.codes[i] += 1;
                let top = self.maxes[i - 1].max(self.codes[i]);
                self.maxes[i] = top;
                for j in i + 1..m {
                    self.codes[j] = 0;
                    self.maxes[j] = top;
                }
                break;
            }
        }
        Some(out)
    }
}

struct Block {
    vertices: Vec<usize>,
    volume: usize,
    cut: usize,
    shape: Shape,
}

struct Search<'g> {
    g: &'g Graph,
    vol_g: usize,
}

impl Search<'_> {
    fn block(&self, vertices: Vec<usize>, shape: Shape) -> Block {
        let stats = self.g.subset_stats(&vertices).expect("vertices in range");
        Block {
            vertices,
            volume: stats.volume,
            cut: stats.cut,
            shape,
        }
    }

    /// Minimum entropy of the part of the tree from `blocks` upward, when
    /// `levels` more grouping levels sit between them and the root. Returns the
    /// best cost and the shapes of the root's children.
    fn best(&self, blocks: &[Block], levels: usize) -> (f64, Vec<Shape>) {
        if levels == 0 {
            let cost = blocks
                .iter()
                .map(|b| node_term(b.cut, b.volume, self.vol_g, self.vol_g))
                .sum();
            return (cost, blocks.iter().map(|b| b.shape.clone()).collect());
        }
        let mut best: Option<(f64, Vec<Shape>)> = None;
        for partition in SetPartitions::new(blocks.len()) {
            let mut cost = 0.0;
            let mut parents = Vec::with_capacity(partition.len());
            for group in &partition {
                let vertices: Vec<usize> = group
                    .iter()
                    .flat_map(|&b| blocks[b].vertices.iter().copied())
                    .collect();
                let shape = Shape::Node(group.iter().map(|&b| blocks[b].shape.clone()).collect());
                let parent = self.block(vertices, shape);
                cost += group
                    .iter()
                    .map(|&b| node_term(blocks[b].cut, blocks[b].volume, parent.volume, self.vol_g))
                    .sum::<f64>();
                parents.push(parent);
            }
            let (upper, shapes) = self.best(&parents, levels - 1);
            let total = cost + upper;
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, shapes));
            }
        }
        best.expect("at least one partition exists")
    }
}

/// Exact `min H^T(G)` over coding trees of height at most `k`, with a witness.
///
/// The witness has height exactly `min(k, n-1)` (padding uses single-child
/// nodes, which leave the entropy unchanged).
pub fn brute_force_k_entropy(g: &Graph, k: usize) -> Result<(f64, CodingTree)> {
    if k == 0 {
        return Err(Error::ZeroHeight);
    }
    let n = g.n();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let vol_g = g.volume();
    if vol_g == 0 {
        return Err(Error::EdgelessGraph);
    }
    if k == 1 || n == 1 {
        let star = CodingTree::star(g)?;
        let h = crate::entropy::structural_entropy(g, &star)?.total;
        return Ok((h, star));
    }
    let cap = oracle_cap(k);
    if n > cap {
        return Err(Error::TooLargeForOracle { n, k, cap });
    }
    // A tree without single-child nodes over n leaves has height at most n-1.
    let k = k.min(n - 1);
    let search = Search { g, vol_g };
    let leaves: Vec<Block> = (0..n)
        .map(|v| search.block(vec![v], Shape::Leaf(v)))
        .collect();
    let (cost, shapes) = search.best(&leaves, k - 1);
    let tree = CodingTree::from_shape(g, &Shape::Node(shapes))?;
    Ok((cost, tree))
}
