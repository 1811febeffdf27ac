//! Labeled directed graphs that generate admissible switching words.
//!
//! Nodes and labels are 0-based internally. Error messages print them
//! 1-based, the way system files and users number them.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growth::SwitchedSystem;
use crate::numerics::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("automaton needs at least one node and one label")]
    Empty,
    #[error("duplicate edge ({}, {}, label {})", .from + 1, .to + 1, .label + 1)]
    DuplicateEdge { from: usize, to: usize, label: usize },
    #[error("node {} has no outgoing edge", .0 + 1)]
    DanglingNode(usize),
    #[error("edge {} references node {} outside 1..={num_nodes}", .edge + 1, .node + 1)]
    NodeOutOfRange {
        edge: usize,
        node: usize,
        num_nodes: usize,
    },
    #[error("edge {} carries label {} outside 1..={num_labels}", .edge + 1, .label + 1)]
    LabelOutOfRange {
        edge: usize,
        label: usize,
        num_labels: usize,
    },
    #[error("label {} appears on no edge", .0 + 1)]
    UnusedLabel(usize),
    #[error("path enumeration would produce {count} paths, above the cap of {cap}")]
    ExplosionGuard { count: u128, cap: u64 },
}

/// Upper limit on the number of paths an enumeration may materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCap(pub u64);

impl PathCap {
    pub const DEFAULT: PathCap = PathCap(10_000_000);

    fn check(self, count: u128) -> Result<(), AutomatonError> {
        if count > u128::from(self.0) {
            Err(AutomatonError::ExplosionGuard { count, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for PathCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: usize,
}

impl Edge {
    pub fn new(from: usize, to: usize, label: usize) -> Self {
        Self { from, to, label }
    }
}

/// Non-fatal facts found while validating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validation {
    pub strongly_connected: bool,
}

/// Checks the structural invariants of an automaton description.
pub fn validate(
    num_nodes: usize,
    num_labels: usize,
    edges: &[Edge],
) -> Result<Validation, AutomatonError> {
    if num_nodes == 0 || num_labels == 0 {
        return Err(AutomatonError::Empty);
    }
    let mut seen = BTreeMap::new();
    let mut has_out = vec![false; num_nodes];
    let mut label_used = vec![false; num_labels];
    for (k, e) in edges.iter().enumerate() {
        for node in [e.from, e.to] {
            if node >= num_nodes {
                return Err(AutomatonError::NodeOutOfRange {
                    edge: k,
                    node,
                    num_nodes,
                });
            }
        }
        if e.label >= num_labels {
            return Err(AutomatonError::LabelOutOfRange {
                edge: k,
                label: e.label,
                num_labels,
            });
        }
        if seen.insert(*e, k).is_some() {
            return Err(AutomatonError::DuplicateEdge {
                from: e.from,
                to: e.to,
                label: e.label,
            });
        }
        has_out[e.from] = true;
        label_used[e.label] = true;
    }
    if let Some(v) = has_out.iter().position(|h| !h) {
        return Err(AutomatonError::DanglingNode(v));
    }
    if let Some(l) = label_used.iter().position(|u| !u) {
        return Err(AutomatonError::UnusedLabel(l));
    }
    Ok(Validation {
        strongly_connected: strongly_connected(num_nodes, edges),
    })
}

fn reaches_all(num_nodes: usize, adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; num_nodes];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn strongly_connected(num_nodes: usize, edges: &[Edge]) -> bool {
    let mut fwd = vec![Vec::new(); num_nodes];
    let mut bwd = vec![Vec::new(); num_nodes];
    for e in edges {
        fwd[e.from].push(e.to);
        bwd[e.to].push(e.from);
    }
    reaches_all(num_nodes, &fwd) && reaches_all(num_nodes, &bwd)
}

/// A finite automaton: a labeled directed multigraph where every node has
/// an outgoing edge and every label is used.
#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    num_nodes: usize,
    num_labels: usize,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    strongly_connected: bool,
}

impl Automaton {
    pub fn new(
        num_nodes: usize,
        num_labels: usize,
        edges: Vec<Edge>,
    ) -> Result<Self, AutomatonError> {
        let v = validate(num_nodes, num_labels, &edges)?;
        let mut out = vec![Vec::new(); num_nodes];
        for (k, e) in edges.iter().enumerate() {
            out[e.from].push(k);
        }
        Ok(Self {
            num_nodes,
            num_labels,
            edges,
            out,
            strongly_connected: v.strongly_connected,
        })
    }

    /// One node with a self-loop per label: arbitrary switching.
    pub fn arbitrary(num_labels: usize) -> Self {
        let edges = (0..num_labels).map(|l| Edge::new(0, 0, l)).collect();
        Self::new(1, num_labels, edges).expect("arbitrary-switching automaton is valid")
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> Edge {
        self.edges[k]
    }

    /// Indices of the edges leaving `node`, ascending.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    /// Number of paths of length exactly `t`, optionally from one node.
    /// Saturates instead of overflowing.
    pub fn count_paths(&self, t: usize, from: Option<usize>) -> u128 {
        // ways[v] = number of length-k paths ending at v.
        let mut ways: Vec<u128> = match from {
            Some(s) => (0..self.num_nodes).map(|v| u128::from(v == s)).collect(),
            None => vec![1; self.num_nodes],
        };
        for _ in 0..t {
            let mut next = vec![0u128; self.num_nodes];
            for e in &self.edges {
                next[e.to] = next[e.to].saturating_add(ways[e.from]);
            }
            ways = next;
        }
        ways.into_iter().fold(0u128, u128::saturating_add)
    }

    /// All paths of length exactly `t`, in lexicographic order of their
    /// edge-index sequences.
    pub fn enumerate_paths(
        &self,
        t: usize,
        from: Option<usize>,
        cap: PathCap,
    ) -> Result<Vec<Path>, AutomatonError> {
        assert!(t >= 1, "paths have at least one edge");
        cap.check(self.count_paths(t, from))?;
        let mut out = Vec::new();
        let mut stack = Vec::with_capacity(t);
        for (k, e) in self.edges.iter().enumerate() {
            if from.is_some_and(|s| s != e.from) {
                continue;
            }
            stack.push(k);
            self.extend_paths(&mut stack, t, &mut |edges| out.push(self.path(edges)));
            stack.pop();
        }
        Ok(out)
    }

    fn extend_paths(&self, stack: &mut Vec<usize>, t: usize, emit: &mut dyn FnMut(&[usize])) {
        if stack.len() == t {
            emit(stack);
            return;
        }
        let tail = self.edges[*stack.last().expect("non-empty")].to;
        for &k in &self.out[tail] {
            stack.push(k);
            self.extend_paths(stack, t, emit);
            stack.pop();
        }
    }

    /// All closed walks of length at most `max_len`, ordered by length and
    /// then lexicographically by edge indices. Non-simple walks included.
    pub fn enumerate_cycles(
        &self,
        max_len: usize,
        cap: PathCap,
    ) -> Result<Vec<Path>, AutomatonError> {
        assert!(max_len >= 1, "cycles have at least one edge");
        let explored = (1..=max_len)
            .map(|t| self.count_paths(t, None))
            .fold(0u128, u128::saturating_add);
        cap.check(explored)?;
        let mut out = Vec::new();
        for t in 1..=max_len {
            let mut stack = Vec::with_capacity(t);
            for k in 0..self.edges.len() {
                stack.push(k);
                let start = self.edges[k].from;
                self.extend_paths(&mut stack, t, &mut |edges| {
                    if self.edges[*edges.last().expect("non-empty")].to == start {
                        out.push(self.path(edges));
                    }
                });
                stack.pop();
            }
        }
        Ok(out)
    }

    /// Builds a [`Path`] from consecutive edge indices.
    pub fn path(&self, edges: &[usize]) -> Path {
        assert!(!edges.is_empty(), "paths have at least one edge");
        for w in edges.windows(2) {
            assert_eq!(
                self.edges[w[0]].to, self.edges[w[1]].from,
                "edges do not connect"
            );
        }
        Path {
            edges: edges.to_vec(),
            word: edges.iter().map(|&k| self.edges[k].label).collect(),
            start: self.edges[edges[0]].from,
            end: self.edges[*edges.last().expect("non-empty")].to,
        }
    }
}

/// A walk through the automaton: consecutive edges and the word they read.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Path {
    pub edges: Vec<usize>,
    pub word: Vec<usize>,
    pub start: usize,
    pub end: usize,
}

impl Path {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Node sequence `v_0, …, v_t`.
    pub fn nodes(&self, aut: &Automaton) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(self.len() + 1);
        nodes.push(self.start);
        nodes.extend(self.edges.iter().map(|&k| aut.edge(k).to));
        nodes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedEdge {
    pub from: usize,
    pub to: usize,
    /// Base labels `σ(1), …, σ(T)` read along the path.
    pub word: Vec<usize>,
    /// Base edge indices of the underlying path.
    pub path: Vec<usize>,
    /// `A_σ(T) ⋯ A_σ(1)`.
    pub matrix: Matrix,
}

/// The depth-`T` lift: same nodes, one edge per length-`T` path of the
/// base graph, carrying the product of the base matrices along it.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    base: SwitchedSystem,
    depth: usize,
    edges: Vec<LiftedEdge>,
}

impl LiftedSystem {
    pub fn base(&self) -> &SwitchedSystem {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_nodes(&self) -> usize {
        self.base.automaton().num_nodes()
    }

    pub fn edges(&self) -> &[LiftedEdge] {
        &self.edges
    }

    /// Distinct words in order of first appearance; index = lifted label.
    pub fn word_table(&self) -> Vec<Vec<usize>> {
        let mut seen = BTreeMap::new();
        let mut table = Vec::new();
        for e in &self.edges {
            if !seen.contains_key(&e.word) {
                seen.insert(e.word.clone(), table.len());
                table.push(e.word.clone());
            }
        }
        table
    }

    /// The lift as an ordinary system whose labels are the distinct words.
    ///
    /// Two length-`T` paths with the same endpoints and word carry the same
    /// matrix, so they collapse into a single edge here.
    pub fn as_system(&self) -> SwitchedSystem {
        let table = self.word_table();
        let index: BTreeMap<&Vec<usize>, usize> =
            table.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let mut matrices = vec![None; table.len()];
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            let label = index[&e.word];
            if matrices[label].is_none() {
                matrices[label] = Some(e.matrix.clone());
            }
            let edge = Edge::new(e.from, e.to, label);
            if seen.insert(edge) {
                edges.push(edge);
            }
        }
        let aut = Automaton::new(self.num_nodes(), table.len(), edges)
            .expect("lift of a valid automaton is valid");
        let matrices = matrices.into_iter().map(|m| m.expect("word used")).collect();
        SwitchedSystem::new(aut, matrices).expect("lifted matrices share the base dimension")
    }
}

/// Builds the depth-`T` lift of `sys`.
pub fn lift(sys: &SwitchedSystem, depth: usize, cap: PathCap) -> Result<LiftedSystem, AutomatonError> {
    assert!(depth >= 1, "lift depth must be at least 1");
    let aut = sys.automaton();
    let paths = aut.enumerate_paths(depth, None, cap)?;
    let edges = paths
        .into_iter()
        .map(|p| LiftedEdge {
            from: p.start,
            to: p.end,
            matrix: sys.word_product(&p.word),
            word: p.word,
            path: p.edges,
        })
        .collect();
    Ok(LiftedSystem {
        base: sys.clone(),
        depth,
        edges,
    })
}
