use std::collections::{BTreeMap, BTreeSet};

use super::support::TreeEquilibrium;
use super::tree::AttackTree;
use super::{AttackPath, MixedEquilibrium, SolveError};
use crate::graph::{connecting_path, connecting_path_avoiding, Graph};
use crate::model::CanonicalGame;

/// Lifts the tree equilibrium back to `original_g` (canonical labels): each
/// tree edge is replaced by a path through unattacked defenders, and the
/// result is mapped to the caller's labels.
pub fn reconstruct_equilibrium(
    game: &CanonicalGame,
    original_g: &Graph,
    tree: &AttackTree,
    te: &TreeEquilibrium,
) -> Result<MixedEquilibrium, SolveError> {
    let support = tree.support();
    let mut segments: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&m, &parent) in tree.parents() {
        segments.insert(m, connecting_path(original_g, &support, parent, m)?);
    }

    let n = game.game().node_count();
    let mut attacker = Vec::with_capacity(support.len());
    for &j in &support {
        let tree_path = tree.path_to(j);
        let mut path = vec![0];
        for &m in &tree_path[1..] {
            path.extend_from_slice(&segments[&m][1..]);
        }
        if !is_simple(&path) {
            path = reroute(original_g, &support, &tree_path)?;
        }
        attacker.push(AttackPath { path: path.iter().map(|&v| game.original_label(v)).collect(), prob: te.q[&j] });
    }

    let mut defense = vec![0.0; n];
    for (&j, &xj) in &te.x {
        defense[game.original_label(j) - 1] = xj;
    }
    let mut support_orig: Vec<usize> = support.iter().map(|&j| game.original_label(j)).collect();
    support_orig.sort_unstable();
    Ok(MixedEquilibrium {
        attacker,
        defense,
        utility: te.utility,
        support: support_orig,
        tree: tree.relabel(game.permutation()),
    })
}

fn is_simple(path: &[usize]) -> bool {
    let mut seen = BTreeSet::new();
    path.iter().all(|&v| seen.insert(v))
}

/// Expands the tree path segment by segment, keeping interior nodes of
/// earlier segments out of later ones.
fn reroute(g: &Graph, support: &BTreeSet<usize>, tree_path: &[usize]) -> Result<Vec<usize>, SolveError> {
    let target = *tree_path.last().expect("non-empty tree path");
    let mut used = BTreeSet::new();
    let mut path = vec![0];
    for pair in tree_path.windows(2) {
        let segment = connecting_path_avoiding(g, support, pair[0], pair[1], &used)
            .map_err(|_| SolveError::PathCollision { target })?;
        used.extend(segment[1..segment.len() - 1].iter().copied());
        path.extend_from_slice(&segment[1..]);
    }
    if !is_simple(&path) {
        return Err(SolveError::PathCollision { target });
    }
    Ok(path)
}
