//! Seeded generators for random scoped graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeKind, ScopedGraph};

/// A DAG on `n` nodes: `V00 .. V{n-2}` in index order plus the utility `Y`
/// as the last node. Each forward pair gets an edge with probability
/// `p_edge`; each non-utility node is a decision with probability
/// `p_decision`.
pub fn random_graph(seed: u64, n: usize, p_edge: f64, p_decision: f64) -> ScopedGraph {
    assert!(n >= 1, "need at least the utility node");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> =
        (0..n).map(|i| if i + 1 == n { "Y".to_string() } else { format!("V{i:02}") }).collect();
    let nodes: Vec<(&str, NodeKind)> = names
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let kind = if i + 1 == n {
                NodeKind::Utility
            } else if rng.gen_bool(p_decision) {
                NodeKind::Decision
            } else {
                NodeKind::Chance
            };
            (s.as_str(), kind)
        })
        .collect();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(p_edge) {
                edges.push((names[i].as_str(), names[j].as_str()));
            }
        }
    }
    ScopedGraph::new(&nodes, &edges).expect("forward edges form a DAG")
}
