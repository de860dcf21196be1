//! Exact mixed-strategy Nash equilibria for attack and defense games on
//! networks: one attacker at node 0 picks a path to a defender, and every
//! defender independently buys an interception probability at convex cost.
//!
//! The solver strips nodes that are never attacked, finds the attacked set
//! by a scan over valuation thresholds, solves a one-dimensional equation
//! for the attacker's utility and lifts the resulting tree equilibrium back
//! onto the original network. [`oracle`] checks the output independently.
//!
//! ```
//! use netdefense_core::{solve, GameInstance};
//!
//! let game = GameInstance::quadratic(2, [(0, 1), (1, 2)], vec![1.0, 2.0], vec![1.0, 1.0], 1.0);
//! let eq = solve(&game).unwrap();
//! assert!((eq.utility() - 0.5f64.sqrt()).abs() < 1e-12);
//! ```

pub mod engine;
pub mod generate;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;

pub use engine::{solve, solve_with, AttackPath, AttackTree, Equilibrium, MixedEquilibrium, SolveError, SolveOptions};
pub use graph::Graph;
pub use model::{CostFunction, CustomCost, GameInstance, ModelError, PureEquilibrium};
pub use oracle::{verify_equilibrium, VerificationReport};
