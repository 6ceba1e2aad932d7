//! Seeded synthetic graphs for tests, benchmarks and demos.
//!
//! Generators use ChaCha8 so a seed reproduces the same graph on every platform.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::DirectedGraph;

/// Uniform random digraph: node `j` gets an out-degree drawn uniformly from
/// `0..=2 * mean_out` (capped at `n`) with distinct uniformly chosen targets.
/// Self-loops and dangling nodes occur naturally.
pub fn random_graph(n: usize, mean_out: f64, seed: u64) -> DirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = ((2.0 * mean_out).round() as usize).min(n);
    let mut edges = Vec::new();
    for j in 0..n {
        let k = rng.gen_range(0..=hi);
        for i in index::sample(&mut rng, n, k) {
            edges.push((j, i));
        }
    }
    DirectedGraph::from_edges(n, edges).expect("generated ids in range")
}

/// Preferential-attachment digraph. Node `t` links to up to `m` earlier nodes chosen
/// with probability proportional to `in_degree + 1`; each such link is reciprocated
/// with probability `reciprocity`.
pub fn preferential_attachment(n: usize, m: usize, reciprocity: f64, seed: u64) -> DirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Every node appears once, plus once per in-link; sampling this pool uniformly
    // draws proportionally to in_degree + 1.
    let mut pool: Vec<usize> = Vec::with_capacity(n * (m + 2));
    let mut edges = Vec::with_capacity(n * m * 2);
    for t in 0..n {
        if t > 0 {
            let mut chosen: Vec<usize> = Vec::with_capacity(m);
            let want = m.min(t);
            let mut attempts = 0;
            while chosen.len() < want && attempts < 50 * m {
                let target = pool[rng.gen_range(0..pool.len())];
                attempts += 1;
                if !chosen.contains(&target) {
                    chosen.push(target);
                }
            }
            for target in chosen {
                edges.push((t, target));
                pool.push(target);
                if rng.gen_bool(reciprocity) {
                    edges.push((target, t));
                    pool.push(t);
                }
            }
        }
        pool.push(t);
    }
    DirectedGraph::from_edges(n, edges).expect("generated ids in range")
}

/// Union of disjoint 2-cycles `(2k, 2k+1)`, so the graph equals its inversion.
pub fn paired_cycles(pairs: usize) -> DirectedGraph {
    let edges = (0..pairs).flat_map(|k| [(2 * k, 2 * k + 1), (2 * k + 1, 2 * k)]);
    DirectedGraph::from_edges(2 * pairs, edges).expect("ids in range")
}

/// `count` distinct node ids drawn uniformly from `0..n`, in draw order.
pub fn random_subset(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, n, count).into_vec()
}
