use std::collections::{BTreeMap, BTreeSet};

use super::SolveError;
use crate::graph::{reduce_by_set, Graph};

/// Tree on the attacker and the attacked defenders: each attacked defender
/// points at the node it is attacked from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttackTree {
    parent: BTreeMap<usize, usize>,
}

impl AttackTree {
    pub fn from_parents(parent: BTreeMap<usize, usize>) -> Self {
        AttackTree { parent }
    }

    /// Attacked defenders, ascending.
    pub fn support(&self) -> BTreeSet<usize> {
        self.parent.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parent.get(&j).copied()
    }

    pub fn parents(&self) -> &BTreeMap<usize, usize> {
        &self.parent
    }

    /// Defenders attacked directly from node 0.
    pub fn root_children(&self) -> BTreeSet<usize> {
        self.parent.iter().filter(|(_, &p)| p == 0).map(|(&j, _)| j).collect()
    }

    pub fn is_root_child(&self, j: usize) -> bool {
        self.parent(j) == Some(0)
    }

    /// Path `0, ..., j` through the tree.
    pub fn path_to(&self, j: usize) -> Vec<usize> {
        let mut path = vec![j];
        let mut cur = j;
        while cur != 0 {
            cur = self.parent[&cur];
            path.push(cur);
            assert!(path.len() <= self.parent.len() + 1, "parent map contains a cycle");
        }
        path.reverse();
        path
    }

    /// Same tree under a relabelling `new_label[old] = new`.
    pub fn relabel(&self, new_label: &[usize]) -> AttackTree {
        AttackTree { parent: self.parent.iter().map(|(&j, &p)| (new_label[j], new_label[p])).collect() }
    }

    /// Checks the structural invariants: rooted at 0, acyclic, valuations
    /// ascending away from the root, at least one root child.
    pub fn check(&self, b: &[f64]) -> Result<(), String> {
        if self.root_children().is_empty() {
            return Err("no defender is attacked directly".into());
        }
        for (&j, &p) in &self.parent {
            if j == 0 {
                return Err("node 0 cannot have a parent".into());
            }
            if p != 0 {
                if !self.parent.contains_key(&p) {
                    return Err(format!("parent {p} of {j} is not in the tree"));
                }
                if b[p - 1] >= b[j - 1] {
                    return Err(format!("parent {p} of {j} is not less valuable"));
                }
            }
        }
        // ascending valuations along edges rule out cycles
        Ok(())
    }

    /// Graphviz digraph with edges parent -> child.
    pub fn to_dot(&self, b: &[f64]) -> String {
        let mut out = String::from("digraph attack_tree {\n    0 [label=\"0 (attacker)\"];\n");
        for &j in self.parent.keys() {
            out.push_str(&format!("    {j} [label=\"{j} (b={})\"];\n", b[j - 1]));
        }
        for (&j, &p) in &self.parent {
            out.push_str(&format!("    {p} -> {j};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the attack tree for support `d_set` on a proper graph: the graph
/// is first reduced by everything outside `d_set`.
pub fn build_attack_tree(proper_g: &Graph, d_set: &BTreeSet<usize>, b: &[f64]) -> Result<AttackTree, SolveError> {
    let outside: BTreeSet<usize> = proper_g.nodes().filter(|&v| v != 0 && !d_set.contains(&v)).collect();
    let (reduced, _) = reduce_by_set(proper_g, &outside)?;
    tree_from_reduced(&reduced, b)
}

/// Tree construction on a graph already reduced to `{0} ∪ D`: a node
/// adjacent to 0 is attacked directly, every other node from its least
/// valuable neighbour.
pub(crate) fn tree_from_reduced(reduced: &Graph, b: &[f64]) -> Result<AttackTree, SolveError> {
    let mut parent = BTreeMap::new();
    for j in reduced.nodes().filter(|&v| v != 0) {
        let p = if reduced.has_edge(0, j) {
            0
        } else {
            let lowest = reduced
                .neighbors(j)
                .min_by(|&u, &v| b[u - 1].total_cmp(&b[v - 1]))
                .ok_or(SolveError::NotProper { node: j })?;
            if b[lowest - 1] >= b[j - 1] {
                return Err(SolveError::NotProper { node: j });
            }
            lowest
        };
        parent.insert(j, p);
    }
    Ok(AttackTree { parent })
}
