//! JSON documents for game instances and equilibria.
//!
//! A game file:
//!
//! ```json
//! {"n": 2, "edges": [[0, 1], [1, 2]], "b": [1.0, 2.0], "d": [1.0, 1.0],
//!  "cost": {"gamma": 1.0}}
//! ```
//!
//! `cost` is optional (default `gamma = 1`) and `gamma` may be a single
//! number or one per defender. Reals are written with shortest round-trip
//! formatting, so documents reload bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{AttackPath, AttackTree, Equilibrium, MixedEquilibrium};
use crate::model::{validate, CostFunction, GameInstance, ModelError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("cannot serialize: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Uniform(f64),
    PerDefender(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub gamma: Gamma,
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec { gamma: Gamma::Uniform(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    #[serde(default)]
    pub cost: CostSpec,
}

impl GameFile {
    /// Schema checks that precede model validation.
    fn check_schema(&self) -> Result<(), IoError> {
        let n = self.n;
        if self.b.len() != n {
            return Err(IoError::Parse(format!("field `b`: {} entries, expected n = {n}", self.b.len())));
        }
        if self.d.len() != n {
            return Err(IoError::Parse(format!("field `d`: {} entries, expected n = {n}", self.d.len())));
        }
        if let Gamma::PerDefender(g) = &self.cost.gamma {
            if g.len() != n {
                return Err(IoError::Parse(format!("field `cost.gamma`: {} entries, expected n = {n}", g.len())));
            }
        }
        for (i, [u, v]) in self.edges.iter().enumerate() {
            if *u > n || *v > n {
                return Err(IoError::Parse(format!("field `edges[{i}]`: [{u}, {v}] has a label outside 0..={n}")));
            }
        }
        Ok(())
    }

    /// Converts to a validated instance.
    pub fn into_game(self) -> Result<GameInstance, IoError> {
        self.check_schema()?;
        let costs = match &self.cost.gamma {
            Gamma::Uniform(g) => vec![CostFunction::quadratic(*g); self.n],
            Gamma::PerDefender(gs) => gs.iter().map(|&g| CostFunction::quadratic(g)).collect(),
        };
        let edges = self.edges.iter().map(|&[u, v]| (u, v));
        Ok(validate(GameInstance::new(self.n, edges, self.b, self.d, costs))?)
    }

    /// Document for a quadratic-cost instance.
    pub fn from_game(game: &GameInstance) -> Result<Self, IoError> {
        let gammas = game
            .costs()
            .iter()
            .map(|c| c.gamma().ok_or_else(|| IoError::Unsupported("custom cost functions".into())))
            .collect::<Result<Vec<f64>, _>>()?;
        let gamma = match gammas.first() {
            Some(&first) if gammas.iter().all(|g| g.to_bits() == first.to_bits()) => Gamma::Uniform(first),
            _ => Gamma::PerDefender(gammas),
        };
        Ok(GameFile {
            n: game.node_count(),
            edges: game.edges().iter().map(|&(u, v)| [u, v]).collect(),
            b: game.valuations().to_vec(),
            d: game.losses().to_vec(),
            cost: CostSpec { gamma },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game files always serialize")
    }
}

pub fn parse_game_str(text: &str) -> Result<GameInstance, IoError> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    file.into_game()
}

pub fn parse_game(path: impl AsRef<Path>) -> Result<GameInstance, IoError> {
    parse_game_str(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    pub path: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeEdge {
    pub node: usize,
    pub parent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumFile {
    #[serde(rename = "type")]
    pub kind: EquilibriumKind,
    pub utility: f64,
    pub support: Vec<usize>,
    pub defense: Vec<f64>,
    pub attacker: Vec<PathEntry>,
    #[serde(default)]
    pub tree: Vec<TreeEdge>,
}

impl From<&Equilibrium> for EquilibriumFile {
    fn from(eq: &Equilibrium) -> Self {
        let kind = if eq.is_pure() { EquilibriumKind::Pure } else { EquilibriumKind::Mixed };
        let mut file = EquilibriumFile::from(&eq.to_mixed());
        file.kind = kind;
        file
    }
}

impl From<&MixedEquilibrium> for EquilibriumFile {
    fn from(eq: &MixedEquilibrium) -> Self {
        EquilibriumFile {
            kind: EquilibriumKind::Mixed,
            utility: eq.utility,
            support: eq.support.clone(),
            defense: eq.defense.clone(),
            attacker: eq.attacker.iter().map(|a| PathEntry { path: a.path.clone(), prob: a.prob }).collect(),
            tree: eq.tree.parents().iter().map(|(&node, &parent)| TreeEdge { node, parent }).collect(),
        }
    }
}

impl EquilibriumFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("equilibrium files always serialize")
    }

    /// The strategy profile described by this document.
    pub fn to_equilibrium(&self) -> MixedEquilibrium {
        MixedEquilibrium {
            attacker: self.attacker.iter().map(|p| AttackPath { path: p.path.clone(), prob: p.prob }).collect(),
            defense: self.defense.clone(),
            utility: self.utility,
            support: self.support.clone(),
            tree: AttackTree::from_parents(self.tree.iter().map(|e| (e.node, e.parent)).collect()),
        }
    }
}

pub fn parse_equilibrium_str(text: &str) -> Result<EquilibriumFile, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
}

pub fn parse_equilibrium(path: impl AsRef<Path>) -> Result<EquilibriumFile, IoError> {
    parse_equilibrium_str(&read(path.as_ref())?)
}
