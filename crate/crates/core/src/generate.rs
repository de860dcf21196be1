//! Seeded random instances for tests and benchmarks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::GameInstance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub edge_prob: f64,
    pub seed: u64,
    /// Assign valuations in ascending label order.
    pub ascending_b: bool,
}

/// Erdős–Rényi graph on `{0, ..., n}` with every unreached node attached
/// to a uniformly chosen reached one, distinct valuations in `(0, 1]`,
/// losses uniform in `(0, 1]` and unit quadratic costs.
pub fn generate(config: &GeneratorConfig) -> Result<GameInstance, GenerateError> {
    let n = config.nodes;
    let p = config.edge_prob;
    if n < 1 {
        return Err(GenerateError::InvalidFlag(format!("nodes must be at least 1, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GenerateError::InvalidFlag(format!("edge probability must be in (0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut adjacency = vec![Vec::new(); n + 1];
    let mut edges = Vec::new();
    for u in 0..=n {
        for v in u + 1..=n {
            if rng.gen_bool(p) {
                edges.push((u, v));
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }

    let mut reached = vec![false; n + 1];
    let mut reached_list = Vec::new();
    let flood = |start: usize, reached: &mut Vec<bool>, reached_list: &mut Vec<usize>| {
        let mut stack = vec![start];
        reached[start] = true;
        while let Some(u) = stack.pop() {
            reached_list.push(u);
            for &v in &adjacency[u] {
                if !reached[v] {
                    reached[v] = true;
                    stack.push(v);
                }
            }
        }
    };
    flood(0, &mut reached, &mut reached_list);
    reached_list.sort_unstable();
    for v in 1..=n {
        if reached[v] {
            continue;
        }
        let anchor = reached_list[rng.gen_range(0..reached_list.len())];
        edges.push((anchor.min(v), anchor.max(v)));
        let before = reached_list.len();
        flood(v, &mut reached, &mut reached_list);
        reached_list[before..].sort_unstable();
    }

    let b = loop {
        let mut b: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
        b.sort_by(f64::total_cmp);
        let distinct = b.iter().map(|v| v.to_bits()).collect::<BTreeSet<_>>().len() == n;
        if distinct {
            if !config.ascending_b {
                b.shuffle(&mut rng);
            }
            break b;
        }
    };
    let d: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    Ok(GameInstance::quadratic(n, edges, b, d, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(nodes: usize, edge_prob: f64, seed: u64) -> GeneratorConfig {
        GeneratorConfig { nodes, edge_prob, seed, ascending_b: true }
    }

    #[test]
    fn single_node() {
        let g = generate(&config(1, 1.0, 7)).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert!(g.check().is_ok());
    }

    #[test]
    fn twelve_nodes_validate() {
        let g = generate(&config(12, 0.3, 1)).unwrap();
        assert_eq!(g.node_count(), 12);
        assert!(g.check().is_ok());
        assert!(g.valuations().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_flags() {
        assert!(generate(&config(0, 0.5, 1)).is_err());
        assert!(generate(&config(3, 0.0, 1)).is_err());
        assert!(generate(&config(3, 1.5, 1)).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate(&config(20, 0.2, 9)), generate(&config(20, 0.2, 9)));
        assert_ne!(generate(&config(20, 0.2, 9)), generate(&config(20, 0.2, 10)));
    }

    #[test]
    fn unsorted_valuations_still_valid() {
        for seed in 0..50 {
            let g = generate(&GeneratorConfig { ascending_b: false, ..config(8, 0.1, seed) }).unwrap();
            assert!(g.check().is_ok());
        }
    }

    #[test]
    fn sparse_graphs_are_repaired() {
        for seed in 0..100 {
            assert!(generate(&config(30, 0.01, seed)).unwrap().check().is_ok());
        }
    }
}
