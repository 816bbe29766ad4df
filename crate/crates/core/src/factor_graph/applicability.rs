//! Preconditions of the exact BP/MF schedule: the BP subgraph must be a
//! forest and every MF factor may touch at most one variable of `I_BP`.

use std::collections::VecDeque;
use std::fmt;

use super::{BpMfPartition, FactorGraph, FactorId, VarId};

/// Node of the bipartite graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Var(VarId),
    Factor(FactorId),
}

/// Outcome of [`check_algorithm1_applicable`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Applicability {
    Applicable,
    /// An MF factor touches more than one variable of `I_BP`.
    MfFactorTouchesBp { factor: FactorId, vars: Vec<VarId> },
    /// The BP subgraph contains the listed cycle (first node repeated implicitly).
    BpCycle { cycle: Vec<Node> },
}

impl Applicability {
    pub fn is_applicable(&self) -> bool {
        matches!(self, Applicability::Applicable)
    }

    /// Human-readable witness using variable and factor names.
    pub fn describe(&self, graph: &FactorGraph) -> String {
        match self {
            Applicability::Applicable => "applicable".into(),
            Applicability::MfFactorTouchesBp { factor, vars } => format!(
                "MF factor `{}` touches {} BP variables ({})",
                graph.factor(*factor).name,
                vars.len(),
                vars.iter()
                    .map(|v| graph.variable(*v).name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            Applicability::BpCycle { cycle } => format!(
                "BP subgraph has a cycle: {}; loopy variant required",
                cycle
                    .iter()
                    .map(|n| match n {
                        Node::Var(v) => graph.variable(*v).name.clone(),
                        Node::Factor(a) => graph.factor(*a).name.clone(),
                    })
                    .collect::<Vec<_>>()
                    .join(" - ")
            ),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var(v) => write!(f, "{v}"),
            Node::Factor(a) => write!(f, "{a}"),
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Checks both preconditions; the MF condition is reported first.
pub fn check_algorithm1_applicable(graph: &FactorGraph, partition: &BpMfPartition) -> Applicability {
    for a in partition.mf_factors() {
        let vars: Vec<VarId> = graph
            .scope(a)
            .iter()
            .copied()
            .filter(|&v| partition.in_ibp(v))
            .collect();
        if vars.len() > 1 {
            return Applicability::MfFactorTouchesBp { factor: a, vars };
        }
    }
    // Nodes: variables first, then factors.
    let nv = graph.num_vars();
    let node = |n: Node| match n {
        Node::Var(v) => v.0,
        Node::Factor(a) => nv + a.0,
    };
    let mut uf = UnionFind::new(nv + graph.num_factors());
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nv + graph.num_factors()];
    for a in partition.bp_factors() {
        for &v in graph.scope(a) {
            let (x, y) = (node(Node::Factor(a)), node(Node::Var(v)));
            if !uf.union(x, y) {
                let path = tree_path(&adjacency, y, x);
                let cycle = path
                    .into_iter()
                    .map(|k| if k < nv { Node::Var(VarId(k)) } else { Node::Factor(FactorId(k - nv)) })
                    .collect();
                return Applicability::BpCycle { cycle };
            }
            adjacency[x].push(y);
            adjacency[y].push(x);
        }
    }
    Applicability::Applicable
}

/// Path from `from` to `to` in a forest given as adjacency lists (BFS).
fn tree_path(adjacency: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &w in &adjacency[u] {
            if prev[w] == usize::MAX {
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}
