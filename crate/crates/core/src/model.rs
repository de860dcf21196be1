//! Game instances, cost functions and the checks every instance must pass
//! before the solver touches it.
//!
//! Defenders are labelled `1..=n`; the attacker is node `0`. Per-defender
//! vectors (`b`, `d`, costs) are stored zero-based, so defender `j` lives at
//! index `j - 1`. Use the accessor methods rather than indexing directly.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::Graph;

/// Tolerance on `c'(0) = 0` for user-supplied cost functions.
const ZERO_DERIVATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("graph is disconnected: defender {node} is unreachable from the attacker")]
    DisconnectedGraph { node: usize },
    #[error(
        "duplicate attacker valuation b = {value} on defenders {first} and {second} \
         (the distinct-valuation assumption requires pairwise different b)"
    )]
    DuplicateValuation { first: usize, second: usize, value: f64 },
    #[error("invalid cost function for defender {node}: {reason}")]
    InvalidCost { node: usize, reason: String },
    #[error("parameter {name} of defender {node} must be positive, got {value}")]
    NonPositiveParameter { node: usize, name: &'static str, value: f64 },
}

/// A user-supplied cost function. Implementations must be increasing,
/// strictly convex and differentiable on `[0, 1]` with `c(0) = 0`.
pub trait CustomCost: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Inverse of [`CustomCost::derivative`] on `[0, c'(1)]`.
    fn derivative_inverse(&self, y: f64) -> f64;
}

#[derive(Debug, Clone)]
pub enum CostFunction {
    /// `c(x) = gamma * x^2 / 2`.
    Quadratic {
        gamma: f64,
    },
    Custom(Arc<dyn CustomCost>),
}

impl Default for CostFunction {
    fn default() -> Self {
        CostFunction::Quadratic { gamma: 1.0 }
    }
}

impl PartialEq for CostFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CostFunction::Quadratic { gamma: a }, CostFunction::Quadratic { gamma: b }) => a.to_bits() == b.to_bits(),
            (CostFunction::Custom(a), CostFunction::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl CostFunction {
    pub fn quadratic(gamma: f64) -> Self {
        CostFunction::Quadratic { gamma }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            CostFunction::Quadratic { gamma } => gamma * x * x / 2.0,
            CostFunction::Custom(c) => c.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            CostFunction::Quadratic { gamma } => gamma * x,
            CostFunction::Custom(c) => c.derivative(x),
        }
    }

    pub fn derivative_inverse(&self, y: f64) -> f64 {
        match self {
            CostFunction::Quadratic { gamma } => y / gamma,
            CostFunction::Custom(c) => c.derivative_inverse(y),
        }
    }

    /// The quadratic coefficient, if this is a quadratic cost.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            CostFunction::Quadratic { gamma } => Some(*gamma),
            CostFunction::Custom(_) => None,
        }
    }

    fn check(&self, node: usize, loss: f64) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidCost { node, reason };
        if let CostFunction::Quadratic { gamma } = self {
            if !(gamma.is_finite() && *gamma > 0.0) {
                return Err(invalid(format!("quadratic coefficient must be positive, got {gamma}")));
            }
        }
        let at_zero = self.derivative(0.0);
        if at_zero.is_nan() || at_zero.abs() > ZERO_DERIVATIVE_TOL {
            return Err(invalid(format!("c'(0) must be 0, got {at_zero}")));
        }
        let at_one = self.derivative(1.0);
        if !at_one.is_finite() {
            return Err(invalid(format!("c'(1) must be finite, got {at_one}")));
        }
        if at_one < loss {
            return Err(invalid(format!("c'(1) = {at_one} is below the loss value d = {loss}")));
        }
        Ok(())
    }
}

/// An attack and defense game on a network: graph, attacker valuations `b`,
/// defender losses `d` and defender cost functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    b: Vec<f64>,
    d: Vec<f64>,
    costs: Vec<CostFunction>,
}

impl GameInstance {
    /// Builds an unvalidated instance. Edges are normalized to `(min, max)`
    /// and deduplicated; see [`validate`] for the remaining checks.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        b: Vec<f64>,
        d: Vec<f64>,
        costs: Vec<CostFunction>,
    ) -> Self {
        let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort_unstable();
        edges.dedup();
        GameInstance { node_count, edges, b, d, costs }
    }

    /// Instance where every defender has the quadratic cost `gamma * x^2 / 2`.
    pub fn quadratic(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        b: Vec<f64>,
        d: Vec<f64>,
        gamma: f64,
    ) -> Self {
        let costs = vec![CostFunction::quadratic(gamma); node_count];
        Self::new(node_count, edges, b, d, costs)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Attacker valuation of defender `j`.
    pub fn b(&self, j: usize) -> f64 {
        self.b[j - 1]
    }

    /// Loss of defender `j` when successfully attacked.
    pub fn d(&self, j: usize) -> f64 {
        self.d[j - 1]
    }

    pub fn cost(&self, j: usize) -> &CostFunction {
        &self.costs[j - 1]
    }

    pub fn valuations(&self) -> &[f64] {
        &self.b
    }

    pub fn losses(&self) -> &[f64] {
        &self.d
    }

    pub fn costs(&self) -> &[CostFunction] {
        &self.costs
    }

    pub fn defenders(&self) -> impl Iterator<Item = usize> {
        1..=self.node_count
    }

    pub fn all_quadratic(&self) -> bool {
        self.costs.iter().all(|c| c.gamma().is_some())
    }

    pub fn graph(&self) -> Graph {
        Graph::from_edges(self.node_count, self.edges.iter().copied())
    }

    /// Checks every standing assumption; `Ok(())` means the instance is
    /// ready for the solver.
    pub fn check(&self) -> Result<(), ModelError> {
        let n = self.node_count;
        if n == 0 {
            return Err(ModelError::Malformed("at least one defender is required".into()));
        }
        for (name, len) in [("b", self.b.len()), ("d", self.d.len()), ("costs", self.costs.len())] {
            if len != n {
                return Err(ModelError::Malformed(format!("{name} has {len} entries, expected {n}")));
            }
        }
        for &(u, v) in &self.edges {
            if v > n {
                return Err(ModelError::Malformed(format!("edge ({u}, {v}) references node {v} > {n}")));
            }
            if u == v {
                return Err(ModelError::Malformed(format!("self-loop on node {u}")));
            }
        }
        for j in self.defenders() {
            for (name, value) in [("b", self.b(j)), ("d", self.d(j))] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ModelError::NonPositiveParameter { node: j, name, value });
                }
            }
        }
        let mut order: Vec<usize> = self.defenders().collect();
        order.sort_by(|&i, &j| self.b(i).total_cmp(&self.b(j)).then(i.cmp(&j)));
        for pair in order.windows(2) {
            if self.b(pair[0]) == self.b(pair[1]) {
                return Err(ModelError::DuplicateValuation {
                    first: pair[0].min(pair[1]),
                    second: pair[0].max(pair[1]),
                    value: self.b(pair[0]),
                });
            }
        }
        for j in self.defenders() {
            self.cost(j).check(j, self.d(j))?;
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<(), ModelError> {
        let n = self.node_count;
        let mut adjacency = vec![Vec::new(); n + 1];
        for &(u, v) in &self.edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut seen = vec![false; n + 1];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(node) => Err(ModelError::DisconnectedGraph { node }),
            None => Ok(()),
        }
    }

    /// Copy of this instance with defender labels renamed: defender `j`
    /// becomes `new_label[j]` (`new_label[0]` must be 0).
    pub fn relabel(&self, new_label: &[usize]) -> GameInstance {
        let n = self.node_count;
        let mut b = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut costs = vec![CostFunction::default(); n];
        for j in self.defenders() {
            let t = new_label[j];
            b[t - 1] = self.b(j);
            d[t - 1] = self.d(j);
            costs[t - 1] = self.cost(j).clone();
        }
        let edges = self.edges.iter().map(|&(u, v)| (new_label[u], new_label[v]));
        GameInstance::new(n, edges, b, d, costs)
    }
}

/// Returns the instance iff it satisfies every standing assumption.
pub fn validate(raw: GameInstance) -> Result<GameInstance, ModelError> {
    raw.check()?;
    Ok(raw)
}

/// A game relabelled so that `i < j` iff `b_i < b_j`, with the mapping back
/// to the caller's labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalGame {
    inner: GameInstance,
    /// `to_original[c]` is the original label of canonical label `c`.
    to_original: Vec<usize>,
    /// `to_canonical[o]` is the canonical label of original label `o`.
    to_canonical: Vec<usize>,
}

impl CanonicalGame {
    pub fn game(&self) -> &GameInstance {
        &self.inner
    }

    pub fn original_label(&self, canonical: usize) -> usize {
        self.to_original[canonical]
    }

    pub fn canonical_label(&self, original: usize) -> usize {
        self.to_canonical[original]
    }

    /// Canonical-to-original map, indexed by canonical label (entry 0 is 0).
    pub fn permutation(&self) -> &[usize] {
        &self.to_original
    }

    pub fn is_identity(&self) -> bool {
        self.to_original.iter().enumerate().all(|(i, &o)| i == o)
    }

    /// The instance in the caller's labels.
    pub fn restore(&self) -> GameInstance {
        self.inner.relabel(&self.to_original)
    }
}

/// Sorts defenders by attacker valuation. Expects a validated game.
pub fn canonicalize(game: &GameInstance) -> CanonicalGame {
    let n = game.node_count();
    let mut order: Vec<usize> = game.defenders().collect();
    order.sort_by(|&i, &j| game.b(i).total_cmp(&game.b(j)));
    let mut to_original = vec![0; n + 1];
    let mut to_canonical = vec![0; n + 1];
    for (pos, &orig) in order.iter().enumerate() {
        to_original[pos + 1] = orig;
        to_canonical[orig] = pos + 1;
    }
    CanonicalGame { inner: game.relabel(&to_canonical), to_original, to_canonical }
}

/// Equilibrium in which the attacker targets the most valuable defender
/// along a single path and only that defender invests.
#[derive(Debug, Clone, PartialEq)]
pub struct PureEquilibrium {
    pub node_count: usize,
    pub target: usize,
    pub path: Vec<usize>,
    pub x_target: f64,
    pub attacker_utility: f64,
}

impl PureEquilibrium {
    /// Full investment vector indexed by `label - 1`.
    pub fn defense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.node_count];
        x[self.target - 1] = self.x_target;
        x
    }

    /// Same equilibrium under a relabelling `new_label[old] = new`.
    pub fn relabel(&self, new_label: &[usize]) -> PureEquilibrium {
        PureEquilibrium {
            node_count: self.node_count,
            target: new_label[self.target],
            path: self.path.iter().map(|&v| new_label[v]).collect(),
            x_target: self.x_target,
            attacker_utility: self.attacker_utility,
        }
    }
}

/// Tests whether the game has an equilibrium in pure strategies: the top
/// defender's guarded value must beat every defender reachable without
/// passing through him.
pub fn check_pure_ne(game: &CanonicalGame) -> Option<PureEquilibrium> {
    let inner = game.game();
    let n = inner.node_count();
    let graph = inner.graph();
    let cost = inner.cost(n);
    let x_target = cost.derivative_inverse(inner.d(n));
    let utility = inner.b(n) * (1.0 - x_target);

    let reachable = graph.reachable_from(0, |v| v == n);
    if reachable.iter().filter(|&&v| v != 0).any(|&j| utility < inner.b(j)) {
        return None;
    }
    let path = graph.shortest_path(0, n, |_| false).expect("validated graph is connected");
    Some(PureEquilibrium { node_count: n, target: n, path, x_target, attacker_utility: utility })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_game() -> GameInstance {
        GameInstance::quadratic(2, [(0, 1), (0, 2)], vec![1.0, 2.0], vec![0.3, 0.4], 1.0)
    }

    #[test]
    fn minimal_instance_is_valid() {
        let g = GameInstance::quadratic(1, [(0, 1)], vec![1.0], vec![0.5], 1.0);
        assert!(validate(g).is_ok());
    }

    #[test]
    fn duplicate_valuations_rejected() {
        let g = GameInstance::quadratic(2, [(0, 1), (0, 2)], vec![1.0, 1.0], vec![0.5, 0.5], 1.0);
        assert!(matches!(validate(g), Err(ModelError::DuplicateValuation { first: 1, second: 2, .. })));
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = GameInstance::quadratic(2, [(0, 1)], vec![1.0, 2.0], vec![0.5, 0.5], 1.0);
        assert_eq!(validate(g), Err(ModelError::DisconnectedGraph { node: 2 }));
    }

    #[test]
    fn nonpositive_parameters_rejected() {
        let g = GameInstance::quadratic(2, [(0, 1), (1, 2)], vec![1.0, -2.0], vec![0.5, 0.5], 1.0);
        assert!(matches!(validate(g), Err(ModelError::NonPositiveParameter { node: 2, name: "b", .. })));
        let g = GameInstance::quadratic(1, [(0, 1)], vec![1.0], vec![0.0], 1.0);
        assert!(matches!(validate(g), Err(ModelError::NonPositiveParameter { node: 1, name: "d", .. })));
    }

    #[test]
    fn marginal_cost_below_loss_rejected() {
        let g = GameInstance::quadratic(1, [(0, 1)], vec![1.0], vec![1.5], 1.0);
        assert!(matches!(validate(g), Err(ModelError::InvalidCost { node: 1, .. })));
    }

    #[derive(Debug)]
    struct Shifted;
    impl CustomCost for Shifted {
        fn value(&self, x: f64) -> f64 {
            x * x + x
        }
        fn derivative(&self, x: f64) -> f64 {
            2.0 * x + 1.0
        }
        fn derivative_inverse(&self, y: f64) -> f64 {
            (y - 1.0) / 2.0
        }
    }

    #[derive(Debug)]
    struct Unbounded;
    impl CustomCost for Unbounded {
        fn value(&self, x: f64) -> f64 {
            -x - (1.0 - x).ln()
        }
        fn derivative(&self, x: f64) -> f64 {
            x / (1.0 - x)
        }
        fn derivative_inverse(&self, y: f64) -> f64 {
            y / (1.0 + y)
        }
    }

    #[test]
    fn custom_cost_contract_checked() {
        let shifted =
            GameInstance::new(1, [(0, 1)], vec![1.0], vec![0.5], vec![CostFunction::Custom(Arc::new(Shifted))]);
        assert!(matches!(validate(shifted), Err(ModelError::InvalidCost { .. })));
        let unbounded =
            GameInstance::new(1, [(0, 1)], vec![1.0], vec![0.5], vec![CostFunction::Custom(Arc::new(Unbounded))]);
        assert!(matches!(validate(unbounded), Err(ModelError::InvalidCost { .. })));
    }

    #[test]
    fn structural_errors() {
        let g = GameInstance::quadratic(2, [(0, 1), (0, 5)], vec![1.0, 2.0], vec![0.5, 0.5], 1.0);
        assert!(matches!(validate(g), Err(ModelError::Malformed(_))));
        let g = GameInstance::quadratic(2, [(0, 1), (1, 2)], vec![1.0], vec![0.5, 0.5], 1.0);
        assert!(matches!(validate(g), Err(ModelError::Malformed(_))));
    }

    #[test]
    fn quadratic_inverse_round_trip() {
        let c = CostFunction::quadratic(2.5);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((c.derivative_inverse(c.derivative(x)) - x).abs() <= 1e-12);
        }
        assert_eq!(c.derivative_inverse(0.7), 0.7 / 2.5);
    }

    #[test]
    fn canonicalize_swaps_two_labels() {
        let g = GameInstance::quadratic(2, [(0, 1), (1, 2)], vec![3.0, 1.0], vec![0.5, 0.5], 1.0);
        let c = canonicalize(&g);
        assert_eq!(c.permutation(), &[0, 2, 1]);
        assert_eq!(c.game().valuations(), &[1.0, 3.0]);
        assert_eq!(c.game().edges(), &[(0, 2), (1, 2)]);
        assert_eq!(c.restore(), g);
    }

    #[test]
    fn canonicalize_identity_and_idempotent() {
        let g =
            GameInstance::quadratic(4, [(0, 1), (1, 2), (2, 3), (3, 4)], vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4], 1.0);
        let c = canonicalize(&g);
        assert!(c.is_identity());
        assert!(canonicalize(c.game()).is_identity());
    }

    #[test]
    fn canonical_order_of_three() {
        let g = GameInstance::quadratic(3, [(0, 1), (0, 2), (0, 3)], vec![2.0, 0.5, 1.0], vec![0.5; 3], 1.0);
        let c = canonicalize(&g);
        assert_eq!(&c.permutation()[1..], &[2, 3, 1]);
        assert_eq!(c.canonical_label(1), 3);
        assert_eq!(c.restore(), g);
    }

    #[test]
    fn pure_equilibrium_on_star() {
        let c = canonicalize(&validate(star_game()).unwrap());
        let pure = check_pure_ne(&c).expect("pure equilibrium");
        assert_eq!(pure.target, 2);
        assert_eq!(pure.path, vec![0, 2]);
        assert_eq!(pure.x_target, 0.4);
        assert!((pure.attacker_utility - 1.2).abs() < 1e-15);
        assert_eq!(pure.defense(), vec![0.0, 0.4]);
    }

    #[test]
    fn pure_equilibrium_single_defender() {
        let g = GameInstance::quadratic(1, [(0, 1)], vec![1.0], vec![0.5], 1.0);
        let pure = check_pure_ne(&canonicalize(&g)).unwrap();
        assert_eq!(pure.x_target, 0.5);
        assert_eq!(pure.attacker_utility, 0.5);
        assert_eq!(pure.path, vec![0, 1]);
    }

    #[test]
    fn no_pure_equilibrium_on_line() {
        let g = GameInstance::quadratic(2, [(0, 1), (1, 2)], vec![1.0, 2.0], vec![1.0, 1.0], 1.0);
        assert!(check_pure_ne(&canonicalize(&g)).is_none());
    }

    #[test]
    fn pure_path_breadth_first_lowest_label() {
        // Two shortest routes to node 3; the one through node 1 wins.
        let g = GameInstance::quadratic(3, [(0, 2), (0, 1), (1, 3), (2, 3)], vec![0.1, 0.2, 5.0], vec![0.1; 3], 1.0);
        let pure = check_pure_ne(&canonicalize(&g)).unwrap();
        assert_eq!(pure.path, vec![0, 1, 3]);
    }
}
