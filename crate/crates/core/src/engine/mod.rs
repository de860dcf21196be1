//! Constructive equilibrium computation.
//!
//! Pipeline: validate, sort defenders by valuation, test for a pure
//! equilibrium, strip linkers, scan for the least valuable attacked
//! defender, solve for the attacker utility, read off the strategies on the
//! attack tree and expand the tree paths back into the original graph.
//!
//! All intermediate work happens in canonical labels; every public result
//! is in the caller's labels.

mod reconstruct;
mod support;
mod tree;

use thiserror::Error;

pub use reconstruct::reconstruct_equilibrium;
pub use support::{
    compute_tree_strategies, eval_f, find_kstar, find_kstar_with, solve_attacker_utility, solve_attacker_utility_with,
    suffix_support, RootMethod, SupportChoice, TreeEquilibrium, NORMALIZATION_TOL,
};
pub use tree::{build_attack_tree, AttackTree};

use crate::graph::{properize, Graph, GraphError, ReductionTrace};
use crate::model::{canonicalize, check_pure_ne, CanonicalGame, GameInstance, ModelError, PureEquilibrium};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph is not proper: defender {node} has no edge to 0 and no less valuable neighbour")]
    NotProper { node: usize },
    #[error("attacker utility {utility} is outside the domain of the support function")]
    DomainError { utility: f64 },
    #[error("no candidate support satisfies the selection condition")]
    NoMixedSupport,
    #[error("several candidate supports satisfy the selection condition: k in {0:?}")]
    MultipleSupports(Vec<usize>),
    #[error("attacker utility {utility} is not bracketed by ({lower:?}, {upper}]")]
    BracketFailure { utility: f64, lower: Option<f64>, upper: f64 },
    #[error("attack probabilities sum to {sum}, not 1")]
    NormalizationFailure { sum: f64 },
    #[error("could not route a simple attack path to defender {target}")]
    PathCollision { target: usize },
}

/// One attack path with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPath {
    pub path: Vec<usize>,
    pub prob: f64,
}

impl AttackPath {
    pub fn target(&self) -> usize {
        *self.path.last().expect("attack paths are non-empty")
    }
}

/// Attacker mixture over paths of the original graph plus every defender's
/// investment (`defense[j - 1]` for defender `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedEquilibrium {
    pub attacker: Vec<AttackPath>,
    pub defense: Vec<f64>,
    pub utility: f64,
    /// Attacked defenders, ascending.
    pub support: Vec<usize>,
    pub tree: AttackTree,
}

impl From<PureEquilibrium> for MixedEquilibrium {
    fn from(pure: PureEquilibrium) -> Self {
        let defense = pure.defense();
        MixedEquilibrium {
            attacker: vec![AttackPath { path: pure.path, prob: 1.0 }],
            defense,
            utility: pure.attacker_utility,
            support: vec![pure.target],
            tree: AttackTree::from_parents([(pure.target, 0)].into_iter().collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equilibrium {
    Pure(PureEquilibrium),
    Mixed(MixedEquilibrium),
}

impl Equilibrium {
    pub fn is_pure(&self) -> bool {
        matches!(self, Equilibrium::Pure(_))
    }

    pub fn utility(&self) -> f64 {
        match self {
            Equilibrium::Pure(p) => p.attacker_utility,
            Equilibrium::Mixed(m) => m.utility,
        }
    }

    pub fn defense(&self) -> Vec<f64> {
        match self {
            Equilibrium::Pure(p) => p.defense(),
            Equilibrium::Mixed(m) => m.defense.clone(),
        }
    }

    /// The equilibrium as a strategy profile, pure ones included.
    pub fn to_mixed(&self) -> MixedEquilibrium {
        match self {
            Equilibrium::Pure(p) => p.clone().into(),
            Equilibrium::Mixed(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub root_method: RootMethod,
    /// Test every candidate support and fail unless exactly one qualifies.
    pub scan_all_k: bool,
}

/// Solver output together with the intermediate objects, in canonical labels.
#[derive(Debug, Clone)]
pub struct SolveDetails {
    pub equilibrium: Equilibrium,
    pub canonical: CanonicalGame,
    /// Proper graph and linker removals; absent for pure equilibria.
    pub properized: Option<(Graph, ReductionTrace)>,
    pub support: Option<SupportChoice>,
    pub tree_equilibrium: Option<TreeEquilibrium>,
}

pub fn solve(game: &GameInstance) -> Result<Equilibrium, SolveError> {
    solve_with(game, &SolveOptions::default())
}

pub fn solve_with(game: &GameInstance, options: &SolveOptions) -> Result<Equilibrium, SolveError> {
    solve_detailed(game, options).map(|d| d.equilibrium)
}

pub fn solve_detailed(game: &GameInstance, options: &SolveOptions) -> Result<SolveDetails, SolveError> {
    game.check()?;
    let canonical = canonicalize(game);

    if let Some(pure) = check_pure_ne(&canonical) {
        let mut pure = pure.relabel(canonical.permutation());
        // breadth-first tie-break in the caller's labels
        pure.path = game.graph().shortest_path(0, pure.target, |_| false).expect("validated graph is connected");
        return Ok(SolveDetails {
            equilibrium: Equilibrium::Pure(pure),
            canonical,
            properized: None,
            support: None,
            tree_equilibrium: None,
        });
    }

    let inner = canonical.game();
    let graph = inner.graph();
    let (proper, trace) = properize(&graph, inner.valuations());
    let choice = find_kstar_with(&canonical, &proper, options.scan_all_k)?;
    let utility = solve_attacker_utility_with(&canonical, &choice, options.root_method)?;
    let te = compute_tree_strategies(&canonical, &choice.tree, utility)?;
    let mixed = reconstruct_equilibrium(&canonical, &graph, &choice.tree, &te)?;
    Ok(SolveDetails {
        equilibrium: Equilibrium::Mixed(mixed),
        canonical,
        properized: Some((proper, trace)),
        support: Some(choice),
        tree_equilibrium: Some(te),
    })
}
