//! Independent checks of a claimed equilibrium.
//!
//! Nothing here calls into the constructive solver. The attacker side is
//! checked against a best-response search over all simple paths, the
//! defender side against each defender's first-order condition, and both
//! payoffs can be estimated by Monte Carlo simulation.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::MixedEquilibrium;
use crate::graph::Graph;
use crate::model::GameInstance;

/// Default tolerance for instances solved in closed form.
pub const DEFAULT_EPSILON_QUADRATIC: f64 = 1e-9;
/// Default tolerance for instances solved by bisection.
pub const DEFAULT_EPSILON_BISECTION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("equilibrium does not match the game: {0}")]
    StructuralMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub is_epsilon_ne: bool,
    pub epsilon_used: f64,
    /// Best achievable attacker payoff minus the claimed utility.
    pub attacker_gap: f64,
    /// Largest `|payoff - utility|` over paths played with positive probability.
    pub support_gap: f64,
    /// `|c_j'(x_j) - d_j * sum_p pi(p) alpha_j(p)|` per defender, indexed by `label - 1`.
    pub defender_gaps: Vec<f64>,
    pub normalization_gap: f64,
    /// A best attacker response and its payoff.
    pub best_response: (Vec<usize>, f64),
}

impl VerificationReport {
    pub fn max_defender_gap(&self) -> f64 {
        self.defender_gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Probability that an attack along `path` reaches its last node, i.e. the
/// product of `1 - x` over every earlier defender.
fn reach_probability(path: &[usize], x: &[f64]) -> f64 {
    path[..path.len() - 1].iter().filter(|&&v| v != 0).map(|&v| 1.0 - x[v - 1]).product()
}

fn path_payoff(path: &[usize], x: &[f64], b: &[f64]) -> f64 {
    let t = *path.last().expect("non-empty path");
    if t == 0 {
        return 0.0;
    }
    reach_probability(path, x) * (1.0 - x[t - 1]) * b[t - 1]
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The attacker's best pure response to investments `x`: the target and
/// path maximising `alpha * (1 - x_t) * b_t`.
///
/// Runs Dijkstra with node weights `-ln(1 - x)` (infinite when `x = 1`), so
/// the shortest route to each node is its most reliable approach. The
/// returned value is recomputed as a product along the chosen path.
pub fn best_attack_path(g: &Graph, x: &[f64], b: &[f64]) -> (Vec<usize>, f64) {
    let weight = |v: usize| if v == 0 { 0.0 } else { -(1.0 - x[v - 1]).ln() };
    let size = g.nodes().max().unwrap_or(0) + 1;
    // dist[v]: weight of the transit nodes strictly before v
    let mut dist = vec![f64::INFINITY; size];
    let mut prev = vec![usize::MAX; size];
    let mut done = vec![false; size];
    dist[0] = 0.0;
    let mut heap = BinaryHeap::from([Entry { cost: 0.0, node: 0 }]);
    while let Some(Entry { cost, node: u }) = heap.pop() {
        if done[u] || cost > dist[u] {
            continue;
        }
        done[u] = true;
        let through = cost + weight(u);
        if through.is_infinite() {
            continue;
        }
        for v in g.neighbors(u) {
            if !done[v] && through < dist[v] {
                dist[v] = through;
                prev[v] = u;
                heap.push(Entry { cost: through, node: v });
            }
        }
    }

    let mut best: (Vec<usize>, f64) = (vec![0], 0.0);
    for t in g.nodes().filter(|&v| v != 0) {
        if dist[t].is_infinite() {
            continue;
        }
        let mut path = vec![t];
        while *path.last().unwrap() != 0 {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        let value = path_payoff(&path, x, b);
        if value > best.1 || best.0.len() == 1 {
            best = (path, value);
        }
    }
    best
}

/// Exhaustive version of [`best_attack_path`] enumerating every simple
/// path from 0. Exponential; intended for graphs with at most ~10 defenders.
pub fn exhaustive_best_attack_path(g: &Graph, x: &[f64], b: &[f64]) -> (Vec<usize>, f64) {
    fn walk(
        g: &Graph,
        x: &[f64],
        b: &[f64],
        path: &mut Vec<usize>,
        on_path: &mut BTreeSet<usize>,
        best: &mut (Vec<usize>, f64),
    ) {
        let u = *path.last().unwrap();
        if u != 0 {
            let value = path_payoff(path, x, b);
            if value > best.1 || best.0.len() == 1 {
                *best = (path.clone(), value);
            }
        }
        for v in g.neighbors(u) {
            if on_path.insert(v) {
                path.push(v);
                walk(g, x, b, path, on_path, best);
                path.pop();
                on_path.remove(&v);
            }
        }
    }
    let mut best = (vec![0], 0.0);
    walk(g, x, b, &mut vec![0], &mut BTreeSet::from([0]), &mut best);
    best
}

fn check_structure(game: &GameInstance, g: &Graph, eq: &MixedEquilibrium) -> Result<(), VerifyError> {
    let n = game.node_count();
    let mismatch = |m: String| Err(VerifyError::StructuralMismatch(m));
    if eq.defense.len() != n {
        return mismatch(format!("defense has {} entries, expected {n}", eq.defense.len()));
    }
    if let Some(j) = eq.defense.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return mismatch(format!("investment of defender {} is outside [0, 1]", j + 1));
    }
    if eq.attacker.is_empty() {
        return mismatch("attacker strategy is empty".into());
    }
    for a in &eq.attacker {
        if !(a.prob.is_finite() && a.prob >= 0.0) {
            return mismatch(format!("invalid probability {}", a.prob));
        }
        if a.path.first() != Some(&0) || a.path.len() < 2 {
            return mismatch(format!("path {:?} does not start at 0 and reach a defender", a.path));
        }
        let mut seen = BTreeSet::new();
        if !a.path.iter().all(|&v| v <= n && seen.insert(v)) {
            return mismatch(format!("path {:?} is not simple", a.path));
        }
        if !a.path.windows(2).all(|w| g.has_edge(w[0], w[1])) {
            return mismatch(format!("path {:?} uses a missing edge", a.path));
        }
    }
    Ok(())
}

/// Checks that `eq` is an `epsilon`-Nash equilibrium of `game`.
pub fn verify_equilibrium(
    game: &GameInstance,
    eq: &MixedEquilibrium,
    epsilon: f64,
) -> Result<VerificationReport, VerifyError> {
    let g = game.graph();
    check_structure(game, &g, eq)?;
    let x = &eq.defense;
    let b = game.valuations();
    let u = eq.utility;

    let best_response = best_attack_path(&g, x, b);
    let attacker_gap = best_response.1 - u;
    let support_gap =
        eq.attacker.iter().filter(|a| a.prob > 0.0).map(|a| (path_payoff(&a.path, x, b) - u).abs()).fold(0.0, f64::max);

    // d_j * sum over paths ending at j of pi(p) * alpha_j(p)
    let mut exposure = vec![0.0; game.node_count()];
    for a in &eq.attacker {
        exposure[a.target() - 1] += a.prob * reach_probability(&a.path, x);
    }
    let defender_gaps: Vec<f64> =
        game.defenders().map(|j| (game.cost(j).derivative(x[j - 1]) - game.d(j) * exposure[j - 1]).abs()).collect();
    let normalization_gap = (eq.attacker.iter().map(|a| a.prob).sum::<f64>() - 1.0).abs();

    let max_defender = defender_gaps.iter().copied().fold(0.0, f64::max);
    let is_epsilon_ne =
        attacker_gap <= epsilon && support_gap <= epsilon && max_defender <= epsilon && normalization_gap <= epsilon;
    Ok(VerificationReport {
        is_epsilon_ne,
        epsilon_used: epsilon,
        attacker_gap,
        support_gap,
        defender_gaps,
        normalization_gap,
        best_response,
    })
}

/// Sample means and standard errors of realised payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffEstimate {
    pub samples: u64,
    pub attacker_mean: f64,
    pub attacker_stderr: f64,
    /// Per defender, indexed by `label - 1`.
    pub defender_mean: Vec<f64>,
    pub defender_stderr: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Moments {
    count: u64,
    attacker: (f64, f64),
    defenders: Vec<(f64, f64)>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments { count: 0, attacker: (0.0, 0.0), defenders: vec![(0.0, 0.0); n] }
    }

    fn merge(mut self, other: Moments) -> Moments {
        self.count += other.count;
        self.attacker.0 += other.attacker.0;
        self.attacker.1 += other.attacker.1;
        for (a, b) in self.defenders.iter_mut().zip(other.defenders) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self
    }
}

fn mean_stderr((sum, sum_sq): (f64, f64), count: u64) -> (f64, f64) {
    let n = count as f64;
    let mean = sum / n;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo payoffs using a single random stream.
pub fn simulate_payoffs(game: &GameInstance, eq: &MixedEquilibrium, samples: u64, seed: u64) -> PayoffEstimate {
    simulate_payoffs_streams(game, eq, samples, seed, 1)
}

/// Monte Carlo payoffs with the budget split over `streams` independently
/// seeded generators run in parallel. Reproducible per `(seed, streams)`.
pub fn simulate_payoffs_streams(
    game: &GameInstance,
    eq: &MixedEquilibrium,
    samples: u64,
    seed: u64,
    streams: u64,
) -> PayoffEstimate {
    assert!(samples >= 1, "at least one sample is required");
    let streams = streams.clamp(1, samples);
    let n = game.node_count();
    let weights: Vec<f64> = eq.attacker.iter().map(|a| a.prob).collect();
    let picker = WeightedIndex::new(&weights).expect("attack probabilities form a distribution");
    let fixed_cost: Vec<f64> = game.defenders().map(|j| game.cost(j).value(eq.defense[j - 1])).collect();

    let run = |stream: u64| -> Moments {
        let budget = samples / streams + u64::from(stream < samples % streams);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut m = Moments::new(n);
        let mut loss = vec![0.0; n];
        for _ in 0..budget {
            let path = &eq.attacker[picker.sample(&mut rng)].path;
            let mut stopped = false;
            for &v in &path[1..] {
                if rng.gen::<f64>() < eq.defense[v - 1] {
                    stopped = true;
                    break;
                }
            }
            let t = *path.last().unwrap();
            let gain = if stopped { 0.0 } else { game.b(t) };
            m.attacker.0 += gain;
            m.attacker.1 += gain * gain;
            loss.copy_from_slice(&fixed_cost);
            if !stopped {
                loss[t - 1] += game.d(t);
            }
            for (acc, l) in m.defenders.iter_mut().zip(&loss) {
                acc.0 -= l;
                acc.1 += l * l;
            }
            m.count += 1;
        }
        m
    };

    let total =
        (0..streams).into_par_iter().map(run).collect::<Vec<_>>().into_iter().fold(Moments::new(n), Moments::merge);
    let (attacker_mean, attacker_stderr) = mean_stderr(total.attacker, total.count);
    let (defender_mean, defender_stderr) = total.defenders.iter().map(|&acc| mean_stderr(acc, total.count)).unzip();
    PayoffEstimate { samples: total.count, attacker_mean, attacker_stderr, defender_mean, defender_stderr }
}
