//! Graph fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sentree_core::Graph;

/// Random graph with `n` vertices and `edges_per_vertex * n` edges, fixed seed.
pub fn sparse_graph(n: usize, edges_per_vertex: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Graph::random_with_edges(n, edges_per_vertex * n, &mut rng)
}

/// Erdős–Rényi graph with a fixed seed.
pub fn dense_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Graph::erdos_renyi(n, p, &mut rng)
}
