//! Weighted DAG shared by the logic model and the multi-agent value network.
//!
//! Every non-input node carries the weighted sum of its parents, so the
//! value of any node is linear in the input assignment. The sensitivity of a
//! node to an input is therefore the sum over all directed paths of the
//! product of edge weights, which is what [`WeightedGraph::sensitivity`]
//! computes by forward-mode propagation.
//!
//! Node transfer functions are fixed to the identity. A nonlinear transfer
//! would slot into [`CompiledGraph::propagate`] and turn the sensitivity
//! routine into a local-derivative chain; none is provided.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = String;

/// Role of a node in a logic model or a multi-agent value network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Input,
    Activity,
    Output,
    OutcomeShort,
    OutcomeMid,
    OutcomeLong,
    Impact,
    IntermediateOutcome,
    ValueSoc,
    ValueEnv,
    ValueEco,
}

impl NodeKind {
    /// Kinds that may not have outgoing edges.
    pub fn is_sink(self) -> bool {
        matches!(
            self,
            NodeKind::Impact | NodeKind::ValueSoc | NodeKind::ValueEnv | NodeKind::ValueEco
        )
    }

    pub fn is_source(self) -> bool {
        self == NodeKind::Input
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
}

/// Which weight rules apply during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphProfile {
    /// Any finite weight (logic models).
    #[default]
    General,
    /// Weights restricted to `[-1, 1]`.
    MultiAgent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Finding {
    /// One strongly connected component with more than one node, or a self loop.
    Cycle { nodes: Vec<NodeId> },
    DanglingEdge { from: NodeId, to: NodeId, missing: NodeId },
    DuplicateEdge { from: NodeId, to: NodeId },
    SinkHasOutgoing { node: NodeId, kind: NodeKind, to: NodeId },
    SourceHasIncoming { node: NodeId, from: NodeId },
    NonFiniteWeight { from: NodeId, to: NodeId },
    WeightOutOfRange { from: NodeId, to: NodeId, weight: f64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::Cycle { nodes } => write!(f, "cycle among [{}]", nodes.join(", ")),
            Finding::DanglingEdge { from, to, missing } => {
                write!(f, "edge {from}->{to} references unknown node {missing}")
            }
            Finding::DuplicateEdge { from, to } => write!(f, "duplicate edge {from}->{to}"),
            Finding::SinkHasOutgoing { node, kind, to } => {
                write!(f, "{kind:?} node {node} has outgoing edge to {to}")
            }
            Finding::SourceHasIncoming { node, from } => {
                write!(f, "input node {node} has incoming edge from {from}")
            }
            Finding::NonFiniteWeight { from, to } => write!(f, "edge {from}->{to} has a non-finite weight"),
            Finding::WeightOutOfRange { from, to, weight } => {
                write!(f, "edge {from}->{to} weight {weight} outside [-1, 1]")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn cycles(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| matches!(f, Finding::Cycle { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.findings.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    InvalidGraph(ValidationReport),
    #[error("missing value for input node {0}")]
    MissingInput(NodeId),
    #[error("{0} is not an input node")]
    NotAnInput(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// Values for the graph's input nodes.
///
/// With `default_missing` unset, every input node must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputAssignment {
    pub values: BTreeMap<NodeId, f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub default_missing: bool,
}

impl InputAssignment {
    pub fn new(values: BTreeMap<NodeId, f64>) -> Self {
        Self { values, default_missing: false }
    }

    /// Assignment where absent inputs read as zero.
    pub fn with_defaults(values: BTreeMap<NodeId, f64>) -> Self {
        Self { values, default_missing: true }
    }

    pub fn zeros() -> Self {
        Self::with_defaults(BTreeMap::new())
    }

    pub fn set(&mut self, id: impl Into<NodeId>, value: f64) {
        self.values.insert(id.into(), value);
    }
}

impl<K: Into<NodeId>> FromIterator<(K, f64)> for InputAssignment {
    fn from_iter<T: IntoIterator<Item = (K, f64)>>(iter: T) -> Self {
        Self::new(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedGraph {
    pub nodes: BTreeMap<NodeId, Node>,
    pub edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<NodeId>, label: impl Into<String>, kind: NodeKind) {
        self.nodes.insert(id.into(), Node { label: label.into(), kind });
    }

    pub fn add_edge(&mut self, from: impl Into<NodeId>, to: impl Into<NodeId>, weight: f64) {
        self.edges.push(Edge { from: from.into(), to: to.into(), weight });
    }

    /// Builder form of [`add_node`](Self::add_node).
    pub fn node(mut self, id: &str, label: &str, kind: NodeKind) -> Self {
        self.add_node(id, label, kind);
        self
    }

    /// Builder form of [`add_edge`](Self::add_edge).
    pub fn edge(mut self, from: &str, to: &str, weight: f64) -> Self {
        self.add_edge(from, to, weight);
        self
    }

    pub fn find_edge(&self, from: &str, to: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter().filter(move |(_, n)| n.kind == kind).map(|(id, _)| id)
    }

    pub fn input_ids(&self) -> Vec<NodeId> {
        self.nodes_of_kind(NodeKind::Input).cloned().collect()
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.nodes.get(id).map(|n| n.label.as_str())
    }

    /// Reports every violated structural rule. Never fails.
    pub fn validate(&self, profile: GraphProfile) -> ValidationReport {
        let mut findings = Vec::new();
        let mut seen = BTreeSet::new();
        for edge in &self.edges {
            let from = self.nodes.get(&edge.from);
            let to = self.nodes.get(&edge.to);
            if from.is_none() {
                findings.push(Finding::DanglingEdge {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                    missing: edge.from.clone(),
                });
            }
            if to.is_none() {
                findings.push(Finding::DanglingEdge {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                    missing: edge.to.clone(),
                });
            }
            if !seen.insert((edge.from.as_str(), edge.to.as_str())) {
                findings.push(Finding::DuplicateEdge { from: edge.from.clone(), to: edge.to.clone() });
            }
            if let Some(from) = from {
                if from.kind.is_sink() {
                    findings.push(Finding::SinkHasOutgoing {
                        node: edge.from.clone(),
                        kind: from.kind,
                        to: edge.to.clone(),
                    });
                }
            }
            if let Some(to) = to {
                if to.kind.is_source() {
                    findings.push(Finding::SourceHasIncoming {
                        node: edge.to.clone(),
                        from: edge.from.clone(),
                    });
                }
            }
            if !edge.weight.is_finite() {
                findings.push(Finding::NonFiniteWeight { from: edge.from.clone(), to: edge.to.clone() });
            } else if profile == GraphProfile::MultiAgent && !(-1.0..=1.0).contains(&edge.weight) {
                findings.push(Finding::WeightOutOfRange {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                    weight: edge.weight,
                });
            }
        }
        for nodes in self.cyclic_components() {
            findings.push(Finding::Cycle { nodes });
        }
        ValidationReport { findings }
    }

    /// Strongly connected components that contain a cycle, each sorted by id.
    fn cyclic_components(&self) -> Vec<Vec<NodeId>> {
        let ids: Vec<&NodeId> = self.nodes.keys().collect();
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut succ = vec![Vec::new(); ids.len()];
        let mut self_loop = vec![false; ids.len()];
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
                succ[a].push(b);
                if a == b {
                    self_loop[a] = true;
                }
            }
        }
        let mut out = Vec::new();
        for comp in tarjan_scc(&succ) {
            if comp.len() > 1 || self_loop[comp[0]] {
                let mut names: Vec<NodeId> = comp.iter().map(|&i| ids[i].clone()).collect();
                names.sort();
                out.push(names);
            }
        }
        out.sort();
        out
    }

    /// Validates and builds the index-based form used for propagation.
    pub fn compile(&self, profile: GraphProfile) -> Result<CompiledGraph, GraphError> {
        let report = self.validate(profile);
        if !report.is_valid() {
            return Err(GraphError::InvalidGraph(report));
        }
        Ok(CompiledGraph::build(self))
    }

    /// Node values under the given input assignment.
    pub fn evaluate(&self, inputs: &InputAssignment) -> Result<BTreeMap<NodeId, f64>, GraphError> {
        self.compile(GraphProfile::General)?.evaluate(inputs)
    }

    /// d target / d input under linear propagation; zero when no path exists.
    pub fn sensitivity(&self, input: &str, target: &str) -> Result<f64, GraphError> {
        self.compile(GraphProfile::General)?.sensitivity(input, target)
    }

    /// Central difference of `target` around `baseline` in the `input` coordinate.
    pub fn finite_diff_sensitivity(
        &self,
        input: &str,
        target: &str,
        step: f64,
        baseline: &InputAssignment,
    ) -> Result<f64, GraphError> {
        self.compile(GraphProfile::General)?
            .finite_diff_sensitivity(input, target, step, baseline)
    }
}

fn tarjan_scc(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for i in 0..s.succ[v].len() {
            let w = s.succ[v][i];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            s.out.push(comp);
        }
    }

    let n = succ.len();
    let mut s = State {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// Validated graph with dense indices and a fixed topological order.
///
/// Parents of each node are kept sorted by id so that floating-point sums do
/// not depend on node or edge insertion order.
#[derive(Debug, Clone)]
pub struct CompiledGraph {
    ids: Vec<NodeId>,
    kinds: Vec<NodeKind>,
    index: BTreeMap<NodeId, usize>,
    parents: Vec<Vec<(usize, f64)>>,
    order: Vec<usize>,
}

impl CompiledGraph {
    fn build(graph: &WeightedGraph) -> Self {
        let ids: Vec<NodeId> = graph.nodes.keys().cloned().collect();
        let kinds: Vec<NodeKind> = graph.nodes.values().map(|n| n.kind).collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let mut parents = vec![Vec::new(); ids.len()];
        let mut children = vec![Vec::new(); ids.len()];
        for e in &graph.edges {
            let (a, b) = (index[&e.from], index[&e.to]);
            parents[b].push((a, e.weight));
            children[a].push(b);
        }
        for p in &mut parents {
            p.sort_by_key(|&(i, _)| i);
        }
        // Kahn's algorithm, smallest index first.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..ids.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(ids.len());
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), ids.len(), "validated graph must be acyclic");
        Self { ids, kinds, index, parents, order }
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn topological_order(&self) -> impl Iterator<Item = &NodeId> {
        self.order.iter().map(|&i| &self.ids[i])
    }

    fn idx(&self, id: &str) -> Result<usize, GraphError> {
        self.index.get(id).copied().ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    fn input_idx(&self, id: &str) -> Result<usize, GraphError> {
        let i = self.idx(id)?;
        if self.kinds[i] != NodeKind::Input {
            return Err(GraphError::NotAnInput(id.to_string()));
        }
        Ok(i)
    }

    fn seed(&self, inputs: &InputAssignment) -> Result<Vec<f64>, GraphError> {
        let mut values = vec![0.0; self.ids.len()];
        for (id, &v) in &inputs.values {
            values[self.input_idx(id)?] = v;
        }
        if !inputs.default_missing {
            for (i, kind) in self.kinds.iter().enumerate() {
                if *kind == NodeKind::Input && !inputs.values.contains_key(&self.ids[i]) {
                    return Err(GraphError::MissingInput(self.ids[i].clone()));
                }
            }
        }
        Ok(values)
    }

    /// Weighted-sum propagation in topological order. Input entries of
    /// `values` are left untouched.
    fn propagate(&self, values: &mut [f64]) {
        for &v in &self.order {
            if self.kinds[v] == NodeKind::Input {
                continue;
            }
            values[v] = self.parents[v].iter().map(|&(p, w)| w * values[p]).sum();
        }
    }

    pub fn evaluate(&self, inputs: &InputAssignment) -> Result<BTreeMap<NodeId, f64>, GraphError> {
        let mut values = self.seed(inputs)?;
        self.propagate(&mut values);
        Ok(self.ids.iter().cloned().zip(values).collect())
    }

    /// Value of a single node.
    pub fn evaluate_node(&self, inputs: &InputAssignment, target: &str) -> Result<f64, GraphError> {
        let t = self.idx(target)?;
        let mut values = self.seed(inputs)?;
        self.propagate(&mut values);
        Ok(values[t])
    }

    pub fn sensitivity(&self, input: &str, target: &str) -> Result<f64, GraphError> {
        let i = self.input_idx(input)?;
        let t = self.idx(target)?;
        let mut tangent = vec![0.0; self.ids.len()];
        tangent[i] = 1.0;
        self.propagate(&mut tangent);
        Ok(tangent[t])
    }

    /// Sensitivity of `target` to every input node, keyed by input id.
    pub fn input_sensitivities(&self, target: &str) -> Result<BTreeMap<NodeId, f64>, GraphError> {
        let t = self.idx(target)?;
        // Reverse accumulation: adjoint[v] = d target / d v.
        let mut adjoint = vec![0.0; self.ids.len()];
        adjoint[t] = 1.0;
        for &v in self.order.iter().rev() {
            if adjoint[v] == 0.0 {
                continue;
            }
            for &(p, w) in &self.parents[v] {
                adjoint[p] += w * adjoint[v];
            }
        }
        Ok(self
            .kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == NodeKind::Input)
            .map(|(i, _)| (self.ids[i].clone(), adjoint[i]))
            .collect())
    }

    pub fn finite_diff_sensitivity(
        &self,
        input: &str,
        target: &str,
        step: f64,
        baseline: &InputAssignment,
    ) -> Result<f64, GraphError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(GraphError::InvalidStep(step));
        }
        let i = self.input_idx(input)?;
        let t = self.idx(target)?;
        let base = self.seed(baseline)?;
        let mut plus = base.clone();
        plus[i] += step;
        self.propagate(&mut plus);
        let mut minus = base;
        minus[i] -= step;
        self.propagate(&mut minus);
        Ok((plus[t] - minus[t]) / (2.0 * step))
    }
}
