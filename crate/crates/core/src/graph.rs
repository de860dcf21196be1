//! Undirected graphs over the attacker (node 0) and defenders, together with
//! the reduction machinery used to strip out nodes that are never attacked.
//!
//! Reducing a graph by node `m` deletes `m` and joins every pair of its
//! former neighbours, so every route that used to pass through `m` survives
//! as a direct edge. Graph values are never mutated in place by the public
//! operations; each reduction returns a new graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} is not in the graph")]
    NodeAbsent(usize),
    #[error("the attacker node 0 cannot be removed")]
    CannotRemoveAttacker,
    #[error("no path from {from} to {to} avoiding the blocked nodes")]
    NoSuchPath { from: usize, to: usize },
}

/// Symmetric adjacency with sorted neighbour sets. Always contains node 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
}

impl Graph {
    /// Graph on `{0, ..., node_count}` with the given edges. Self-loops are
    /// dropped.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Graph { adjacency: (0..=node_count).map(|v| (v, BTreeSet::new())).collect() };
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        if u == v {
            return;
        }
        self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default().insert(u);
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(&u).is_some_and(|n| n.contains(&v))
    }

    /// Nodes in ascending label order.
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbours of `v` in ascending label order (empty if `v` is absent).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.get(&v).map_or(0, BTreeSet::len)
    }

    /// Edges as `(u, v)` with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency.iter().flat_map(|(&u, ns)| ns.range(u + 1..).map(move |&v| (u, v))).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Nodes reachable from `start` when nodes matching `blocked` are deleted.
    pub fn reachable_from(&self, start: usize, blocked: impl Fn(usize) -> bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if !blocked(v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from(0, |_| false).len() == self.node_count()
    }

    /// Breadth-first shortest path from `from` to `to` through nodes not
    /// matching `blocked`; neighbours are scanned in ascending order. The
    /// endpoints themselves are never treated as blocked.
    pub fn shortest_path(&self, from: usize, to: usize, blocked: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        if !self.contains(from) || !self.contains(to) {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let mut parent = BTreeMap::from([(from, from)]);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if parent.contains_key(&v) || (v != to && blocked(v)) {
                    continue;
                }
                parent.insert(v, u);
                if v == to {
                    let mut path = vec![to];
                    let mut cur = to;
                    while cur != from {
                        cur = parent[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
        None
    }

    /// Removes `m` and links all its former neighbours pairwise, returning
    /// the neighbour set `m` had.
    fn reduce_in_place(&mut self, m: usize) -> Result<Vec<usize>, GraphError> {
        if m == 0 {
            return Err(GraphError::CannotRemoveAttacker);
        }
        let neighbors: Vec<usize> = self.adjacency.remove(&m).ok_or(GraphError::NodeAbsent(m))?.into_iter().collect();
        for &u in &neighbors {
            let set = self.adjacency.get_mut(&u).expect("adjacency is symmetric");
            set.remove(&m);
            set.extend(neighbors.iter().copied().filter(|&v| v != u));
        }
        Ok(neighbors)
    }
}

/// One node removal: the node and its neighbourhood at removal time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub node: usize,
    pub neighbors: Vec<usize>,
    /// Properization pass that removed the node (0 for plain set reductions).
    pub pass: usize,
}

/// Ordered record of removals, replayable on the graph it started from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReductionTrace {
    pub removals: Vec<Removal>,
}

impl ReductionTrace {
    pub fn removed(&self) -> impl Iterator<Item = usize> + '_ {
        self.removals.iter().map(|r| r.node)
    }

    pub fn is_empty(&self) -> bool {
        self.removals.is_empty()
    }

    /// Number of properization passes that removed at least one node.
    pub fn passes(&self) -> usize {
        self.removals.iter().map(|r| r.pass + 1).max().unwrap_or(0)
    }

    /// Re-applies the removals to `g`. Completion edges are rebuilt from the
    /// recorded neighbourhoods, which also checks they still match.
    pub fn replay(&self, g: &Graph) -> Result<Graph, GraphError> {
        let mut out = g.clone();
        for r in &self.removals {
            let neighbors = out.reduce_in_place(r.node)?;
            debug_assert_eq!(neighbors, r.neighbors);
        }
        Ok(out)
    }
}

/// `g` reduced by `m`.
pub fn reduce_by_node(g: &Graph, m: usize) -> Result<Graph, GraphError> {
    let mut out = g.clone();
    out.reduce_in_place(m)?;
    Ok(out)
}

/// `g` reduced by every node of `s`, removed in ascending label order.
pub fn reduce_by_set(g: &Graph, s: &BTreeSet<usize>) -> Result<(Graph, ReductionTrace), GraphError> {
    let mut out = g.clone();
    let mut trace = ReductionTrace::default();
    for &m in s {
        let neighbors = out.reduce_in_place(m)?;
        trace.removals.push(Removal { node: m, neighbors, pass: 0 });
    }
    Ok((out, trace))
}

/// Nodes not adjacent to the attacker whose neighbours are all more
/// valuable. `b` is indexed by `label - 1`.
pub fn find_linkers(g: &Graph, b: &[f64]) -> BTreeSet<usize> {
    g.nodes()
        .filter(|&i| i != 0 && !g.has_edge(0, i))
        .filter(|&i| g.neighbors(i).all(|j| j != 0 && b[j - 1] > b[i - 1]))
        .collect()
}

/// Removes linkers until none are left. A single pass can expose new
/// linkers, so this iterates to a fixpoint; at most one pass per node.
pub fn properize(g: &Graph, b: &[f64]) -> (Graph, ReductionTrace) {
    let mut out = g.clone();
    let mut trace = ReductionTrace::default();
    for pass in 0.. {
        let linkers = find_linkers(&out, b);
        if linkers.is_empty() {
            break;
        }
        for m in linkers {
            let neighbors = out.reduce_in_place(m).expect("linkers are present non-attacker nodes");
            trace.removals.push(Removal { node: m, neighbors, pass });
        }
    }
    (out, trace)
}

/// Shortest path from `i` to `j` whose interior avoids `d_set` and the
/// attacker. Neighbours are scanned in ascending order.
pub fn connecting_path(g: &Graph, d_set: &BTreeSet<usize>, i: usize, j: usize) -> Result<Vec<usize>, GraphError> {
    connecting_path_avoiding(g, d_set, i, j, &BTreeSet::new())
}

/// As [`connecting_path`], additionally keeping `avoid` out of the interior.
pub fn connecting_path_avoiding(
    g: &Graph,
    d_set: &BTreeSet<usize>,
    i: usize,
    j: usize,
    avoid: &BTreeSet<usize>,
) -> Result<Vec<usize>, GraphError> {
    for v in [i, j] {
        if !g.contains(v) {
            return Err(GraphError::NodeAbsent(v));
        }
    }
    g.shortest_path(i, j, |v| v == 0 || d_set.contains(&v) || avoid.contains(&v))
        .ok_or(GraphError::NoSuchPath { from: i, to: j })
}

/// `p` with `m` spliced out.
pub fn project_path(p: &[usize], m: usize) -> Vec<usize> {
    p.iter().copied().filter(|&v| v != m).collect()
}
