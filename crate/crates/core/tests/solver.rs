use std::sync::Arc;

use netdefense_core::engine::{solve_with, RootMethod, SolveOptions};
use netdefense_core::generate::{generate, GeneratorConfig};
use netdefense_core::io::{parse_equilibrium_str, parse_game_str, EquilibriumFile, GameFile};
use netdefense_core::oracle::{simulate_payoffs, verify_equilibrium, DEFAULT_EPSILON_BISECTION};
use netdefense_core::{solve, CostFunction, CustomCost, GameInstance};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> GameInstance {
    let config = GeneratorConfig {
        nodes: 2 + (seed % 11) as usize,
        edge_prob: [0.2, 0.5, 0.8][(seed % 3) as usize],
        seed,
        ascending_b: seed.is_multiple_of(2),
    };
    generate(&config).unwrap()
}

/// c(x) = x^4 / 4, so c'(x) = x^3.
#[derive(Debug)]
struct Quartic;

impl CustomCost for Quartic {
    fn value(&self, x: f64) -> f64 {
        x.powi(4) / 4.0
    }
    fn derivative(&self, x: f64) -> f64 {
        x.powi(3)
    }
    fn derivative_inverse(&self, y: f64) -> f64 {
        y.cbrt()
    }
}

/// The unit quadratic written as a custom cost, which forces bisection.
#[derive(Debug)]
struct OpaqueQuadratic;

impl CustomCost for OpaqueQuadratic {
    fn value(&self, x: f64) -> f64 {
        x * x / 2.0
    }
    fn derivative(&self, x: f64) -> f64 {
        x
    }
    fn derivative_inverse(&self, y: f64) -> f64 {
        y
    }
}

fn with_cost(game: &GameInstance, cost: Arc<dyn CustomCost>) -> GameInstance {
    let n = game.node_count();
    GameInstance::new(
        n,
        game.edges().iter().copied(),
        game.valuations().to_vec(),
        game.losses().to_vec(),
        vec![CostFunction::Custom(cost); n],
    )
}

#[test]
fn candidate_support_is_unique() {
    let scan_all = SolveOptions { scan_all_k: true, ..SolveOptions::default() };
    for seed in 0..300 {
        let game = instance(seed);
        let first = solve(&game).unwrap();
        let all = solve_with(&game, &scan_all).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(first, all, "seed {seed}");
    }
}

#[test]
fn bisection_matches_closed_form() {
    let bisect = SolveOptions { root_method: RootMethod::Bisection, ..SolveOptions::default() };
    for seed in 0..200 {
        let game = instance(seed);
        let exact = solve(&game).unwrap().to_mixed();
        let approx = solve_with(&game, &bisect).unwrap().to_mixed();
        assert!((exact.utility - approx.utility).abs() <= 1e-9 * exact.utility.max(1.0), "seed {seed}");
        for (x, y) in exact.defense.iter().zip(&approx.defense) {
            assert!((x - y).abs() <= 1e-7, "seed {seed}: {x} vs {y}");
        }
    }
}

#[test]
fn opaque_quadratic_matches_closed_form() {
    for seed in 0..100 {
        let game = instance(seed);
        let exact = solve(&game).unwrap().to_mixed();
        let opaque = solve(&with_cost(&game, Arc::new(OpaqueQuadratic))).unwrap().to_mixed();
        assert!((exact.utility - opaque.utility).abs() <= 1e-9, "seed {seed}");
        assert_eq!(exact.support, opaque.support, "seed {seed}");
    }
}

#[test]
fn quartic_costs_verify() {
    for seed in 0..150 {
        let game = with_cost(&instance(seed), Arc::new(Quartic));
        let eq = solve(&game).unwrap_or_else(|e| panic!("seed {seed}: {e}")).to_mixed();
        let report = verify_equilibrium(&game, &eq, DEFAULT_EPSILON_BISECTION).unwrap();
        assert!(report.is_epsilon_ne, "seed {seed}: {report:?}");
    }
}

#[test]
fn relabelling_defenders_permutes_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..100 {
        let game = instance(seed);
        let n = game.node_count();
        let mut labels: Vec<usize> = (1..=n).collect();
        labels.shuffle(&mut rng);
        labels.insert(0, 0);
        let moved = game.relabel(&labels);

        let a = solve(&game).unwrap().to_mixed();
        let b = solve(&moved).unwrap().to_mixed();
        assert!((a.utility - b.utility).abs() <= 1e-12 * a.utility.max(1.0), "seed {seed}");
        for (j, &t) in labels.iter().enumerate().skip(1) {
            assert!((a.defense[j - 1] - b.defense[t - 1]).abs() <= 1e-12, "seed {seed}, node {j}");
        }
        let mut targets: Vec<usize> = a.support.iter().map(|&j| labels[j]).collect();
        targets.sort_unstable();
        assert_eq!(targets, b.support, "seed {seed}");
    }
}

#[test]
fn files_round_trip() {
    for seed in 0..50 {
        let game = instance(seed);
        let text = GameFile::from_game(&game).unwrap().to_json();
        assert_eq!(parse_game_str(&text).unwrap(), game);

        let eq = solve(&game).unwrap();
        let file = EquilibriumFile::from(&eq);
        let back = parse_equilibrium_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_equilibrium(), eq.to_mixed());
    }
}

#[test]
fn simulation_is_reproducible() {
    let game = instance(7);
    let eq = solve(&game).unwrap().to_mixed();
    let a = simulate_payoffs(&game, &eq, 20_000, 3);
    let b = simulate_payoffs(&game, &eq, 20_000, 3);
    assert_eq!(a, b);
    assert_ne!(a, simulate_payoffs(&game, &eq, 20_000, 4));
}
