//! Logic-model impact evaluation.
//!
//! A [`LogicModel`] is a weighted DAG from policy inputs through activities,
//! outputs and outcomes to a single impact node. The "simplified" analysis
//! ranks inputs by their sensitivity on the impact ([`rank_inputs`]); the
//! "advanced" analysis drives the inputs with decaying pulse trains and
//! reports the impact per period ([`advanced_trajectory`]).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    CompiledGraph, Finding, GraphError, GraphProfile, InputAssignment, NodeId, NodeKind,
    ValidationReport, WeightedGraph,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImpactError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid logic model: {0}")]
    InvalidModel(String),
    #[error("invalid advanced settings: {0}")]
    InvalidSettings(String),
    #[error("top_k must be between 1 and {max}, got {requested}")]
    Range { requested: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum EditRejection {
    Cycle(Vec<NodeId>),
    DuplicateEdge { from: NodeId, to: NodeId },
    DuplicateNode(NodeId),
    UnknownNode(NodeId),
    UnknownEdge { from: NodeId, to: NodeId },
    SecondImpact(NodeId),
    RemovesImpact(NodeId),
    Structure(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("edit rejected: {0:?}")]
pub struct EditRejected(pub EditRejection);

/// One authoring step on a logic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Edit {
    AddNode { id: NodeId, label: String, kind: NodeKind },
    RemoveNode { id: NodeId },
    AddEdge { from: NodeId, to: NodeId, weight: f64 },
    RemoveEdge { from: NodeId, to: NodeId },
    SetWeight { from: NodeId, to: NodeId, weight: f64 },
}

/// Pulse schedule for one input in the advanced analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSettings {
    /// Number of pulses emitted over the horizon.
    pub frequency: u32,
    /// First period that receives a pulse.
    pub start: u32,
    /// Amplitude of each pulse.
    pub effect: f64,
    /// Exponential decay rate per period.
    pub attenuation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvancedSettings {
    pub inputs: BTreeMap<NodeId, PulseSettings>,
    /// Number of periods reported, `0..horizon`.
    pub horizon: u32,
}

impl AdvancedSettings {
    pub fn validate(&self) -> Result<(), ImpactError> {
        if self.horizon < 1 {
            return Err(ImpactError::InvalidSettings("horizon must be at least 1".into()));
        }
        for (id, p) in &self.inputs {
            if p.frequency < 1 {
                return Err(ImpactError::InvalidSettings(format!("{id}: frequency must be at least 1")));
            }
            if !(p.attenuation >= 0.0 && p.attenuation.is_finite()) {
                return Err(ImpactError::InvalidSettings(format!(
                    "{id}: attenuation must be finite and non-negative"
                )));
            }
            if !p.effect.is_finite() {
                return Err(ImpactError::InvalidSettings(format!("{id}: effect must be finite")));
            }
        }
        Ok(())
    }

    /// Periods at which `p` emits a pulse, clipped to the horizon.
    pub fn pulse_times(&self, p: &PulseSettings) -> Vec<u32> {
        let spacing = self.horizon.div_ceil(p.frequency).max(1);
        (0..p.frequency)
            .map(|k| p.start + k * spacing)
            .take_while(|&t| t < self.horizon)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicModel {
    pub graph: WeightedGraph,
    pub impact_node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advanced_settings: Option<AdvancedSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSensitivity {
    pub input_id: NodeId,
    pub label: String,
    pub sensitivity: f64,
}

/// A ranked input handed to the policy simulator or the consensus issue setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyChoiceRef {
    pub id: NodeId,
    pub label: String,
    pub rank: usize,
    pub sensitivity: f64,
}

impl LogicModel {
    pub fn new(graph: WeightedGraph, impact_node: impl Into<NodeId>) -> Self {
        Self { graph, impact_node: impact_node.into(), advanced_settings: None }
    }

    /// Structural validation plus the single-impact rule.
    pub fn validate(&self) -> ValidationReport {
        self.graph.validate(GraphProfile::General)
    }

    fn model_errors(&self) -> Option<String> {
        let impacts: Vec<&NodeId> = self.graph.nodes_of_kind(NodeKind::Impact).collect();
        match self.graph.nodes.get(&self.impact_node) {
            None => return Some(format!("impact node {} does not exist", self.impact_node)),
            Some(n) if n.kind != NodeKind::Impact => {
                return Some(format!("impact node {} has kind {:?}", self.impact_node, n.kind))
            }
            _ => {}
        }
        if impacts.len() != 1 {
            return Some(format!("expected exactly one Impact node, found {}", impacts.len()));
        }
        None
    }

    pub fn compile(&self) -> Result<CompiledGraph, ImpactError> {
        let compiled = self.graph.compile(GraphProfile::General)?;
        if let Some(msg) = self.model_errors() {
            return Err(ImpactError::InvalidModel(msg));
        }
        Ok(compiled)
    }

    /// Inputs that cannot reach the impact node.
    pub fn unreachable_inputs(&self) -> Result<Vec<NodeId>, ImpactError> {
        let compiled = self.compile()?;
        let reach = reaches(&self.graph, &self.impact_node);
        Ok(compiled
            .node_ids()
            .iter()
            .filter(|id| self.graph.nodes[*id].kind == NodeKind::Input && !reach.contains(*id))
            .cloned()
            .collect())
    }

    /// Applies one edit, returning a new model. The receiver is unchanged.
    pub fn apply_edit(&self, edit: &Edit) -> Result<LogicModel, EditRejected> {
        let reject = |r| Err(EditRejected(r));
        let mut next = self.clone();
        let g = &mut next.graph;
        match edit {
            Edit::AddNode { id, label, kind } => {
                if g.nodes.contains_key(id) {
                    return reject(EditRejection::DuplicateNode(id.clone()));
                }
                if *kind == NodeKind::Impact && g.nodes_of_kind(NodeKind::Impact).next().is_some() {
                    return reject(EditRejection::SecondImpact(id.clone()));
                }
                g.add_node(id.clone(), label.clone(), *kind);
            }
            Edit::RemoveNode { id } => {
                if !g.nodes.contains_key(id) {
                    return reject(EditRejection::UnknownNode(id.clone()));
                }
                if *id == self.impact_node {
                    return reject(EditRejection::RemovesImpact(id.clone()));
                }
                g.nodes.remove(id);
                g.edges.retain(|e| e.from != *id && e.to != *id);
            }
            Edit::AddEdge { from, to, weight } => {
                for id in [from, to] {
                    if !g.nodes.contains_key(id) {
                        return reject(EditRejection::UnknownNode(id.clone()));
                    }
                }
                if g.find_edge(from, to).is_some() {
                    return reject(EditRejection::DuplicateEdge { from: from.clone(), to: to.clone() });
                }
                g.add_edge(from.clone(), to.clone(), *weight);
            }
            Edit::RemoveEdge { from, to } => {
                let before = g.edges.len();
                g.edges.retain(|e| !(e.from == *from && e.to == *to));
                if g.edges.len() == before {
                    return reject(EditRejection::UnknownEdge { from: from.clone(), to: to.clone() });
                }
            }
            Edit::SetWeight { from, to, weight } => {
                match g.edges.iter_mut().find(|e| e.from == *from && e.to == *to) {
                    Some(e) => e.weight = *weight,
                    None => return reject(EditRejection::UnknownEdge { from: from.clone(), to: to.clone() }),
                }
            }
        }
        let report = next.graph.validate(GraphProfile::General);
        if let Some(Finding::Cycle { nodes }) = report.cycles().next() {
            return reject(EditRejection::Cycle(nodes.clone()));
        }
        if !report.is_valid() {
            return reject(EditRejection::Structure(report.to_string()));
        }
        Ok(next)
    }
}

/// Nodes from which `target` is reachable, including `target` itself.
fn reaches(graph: &WeightedGraph, target: &str) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![target.to_string()];
    while let Some(v) = stack.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        for e in graph.edges.iter().filter(|e| e.to == v) {
            stack.push(e.from.clone());
        }
    }
    seen
}

/// Inputs ordered by impact sensitivity, descending; ties by ascending id.
pub fn rank_inputs(model: &LogicModel) -> Result<Vec<InputSensitivity>, ImpactError> {
    let compiled = model.compile()?;
    let mut ranked: Vec<InputSensitivity> = compiled
        .input_sensitivities(&model.impact_node)?
        .into_iter()
        .map(|(input_id, sensitivity)| InputSensitivity {
            label: model.graph.nodes[&input_id].label.clone(),
            input_id,
            sensitivity,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.sensitivity
            .total_cmp(&a.sensitivity)
            .then_with(|| a.input_id.cmp(&b.input_id))
    });
    Ok(ranked)
}

/// Impact value for each period `0..horizon`.
///
/// Input `i` follows `effect * sum_{t_p <= t} exp(-attenuation * (t - t_p))`;
/// inputs without a schedule stay at zero.
pub fn advanced_trajectory(
    model: &LogicModel,
    settings: &AdvancedSettings,
) -> Result<BTreeMap<u32, f64>, ImpactError> {
    let compiled = model.compile()?;
    settings.validate()?;
    for id in settings.inputs.keys() {
        match model.graph.nodes.get(id) {
            Some(n) if n.kind == NodeKind::Input => {}
            Some(_) => return Err(GraphError::NotAnInput(id.clone()).into()),
            None => return Err(GraphError::UnknownNode(id.clone()).into()),
        }
    }
    let schedules: Vec<(&NodeId, &PulseSettings, Vec<u32>)> = settings
        .inputs
        .iter()
        .map(|(id, p)| (id, p, settings.pulse_times(p)))
        .collect();
    let mut out = BTreeMap::new();
    for t in 0..settings.horizon {
        let mut inputs = InputAssignment::zeros();
        for (id, p, pulses) in &schedules {
            let level: f64 = pulses
                .iter()
                .filter(|&&tp| tp <= t)
                .map(|&tp| (-p.attenuation * f64::from(t - tp)).exp())
                .sum();
            inputs.set((*id).clone(), p.effect * level);
        }
        out.insert(t, compiled.evaluate_node(&inputs, &model.impact_node)?);
    }
    Ok(out)
}

/// The `top_k` highest-ranked inputs as transferable policy choices.
pub fn export_choices(model: &LogicModel, top_k: usize) -> Result<Vec<PolicyChoiceRef>, ImpactError> {
    let ranked = rank_inputs(model)?;
    if top_k == 0 || top_k > ranked.len() {
        return Err(ImpactError::Range { requested: top_k, max: ranked.len() });
    }
    Ok(ranked
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, r)| PolicyChoiceRef { id: r.input_id, label: r.label, rank: i + 1, sensitivity: r.sensitivity })
        .collect())
}

/// CSV with header `input_id,label,sensitivity`.
pub fn sensitivities_csv(ranked: &[InputSensitivity]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["input_id", "label", "sensitivity"])?;
    for r in ranked {
        w.write_record([r.input_id.as_str(), r.label.as_str(), &r.sensitivity.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}
