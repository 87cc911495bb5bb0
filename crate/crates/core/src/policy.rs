//! Pluralistic policy simulation on a multi-agent value network.
//!
//! Fund allocations (policies) are propagated through the network to social,
//! environmental and economic value nodes. Values across a set of policies
//! are put on the ternary simplex in two steps: each dimension is divided by
//! its range across policies, then each policy's three scaled values are
//! divided by their sum.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CompiledGraph, GraphError, GraphProfile, InputAssignment, NodeId, NodeKind, WeightedGraph};

/// Tolerance on the sum of an allocation-flagged scenario.
pub const ALLOCATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueDimension {
    Soc,
    Env,
    Eco,
}

impl ValueDimension {
    pub const ALL: [ValueDimension; 3] = [ValueDimension::Soc, ValueDimension::Env, ValueDimension::Eco];

    pub fn node_kind(self) -> NodeKind {
        match self {
            ValueDimension::Soc => NodeKind::ValueSoc,
            ValueDimension::Env => NodeKind::ValueEnv,
            ValueDimension::Eco => NodeKind::ValueEco,
        }
    }
}

impl fmt::Display for ValueDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueDimension::Soc => "soc",
            ValueDimension::Env => "env",
            ValueDimension::Eco => "eco",
        })
    }
}

/// One number per value dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub soc: f64,
    pub env: f64,
    pub eco: f64,
}

impl Triple {
    pub fn new(soc: f64, env: f64, eco: f64) -> Self {
        Self { soc, env, eco }
    }

    pub fn sum(&self) -> f64 {
        self.soc + self.env + self.eco
    }

    pub fn map(self, f: impl Fn(ValueDimension, f64) -> f64) -> Self {
        Self {
            soc: f(ValueDimension::Soc, self.soc),
            env: f(ValueDimension::Env, self.env),
            eco: f(ValueDimension::Eco, self.eco),
        }
    }
}

impl Index<ValueDimension> for Triple {
    type Output = f64;
    fn index(&self, d: ValueDimension) -> &f64 {
        match d {
            ValueDimension::Soc => &self.soc,
            ValueDimension::Env => &self.env,
            ValueDimension::Eco => &self.eco,
        }
    }
}

impl IndexMut<ValueDimension> for Triple {
    fn index_mut(&mut self, d: ValueDimension) -> &mut f64 {
        match d {
            ValueDimension::Soc => &mut self.soc,
            ValueDimension::Env => &mut self.env,
            ValueDimension::Eco => &mut self.eco,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid multi-agent model: {0}")]
    InvalidModel(String),
    #[error("invalid scenario {id}: {reason}")]
    InvalidScenario { id: String, reason: String },
    #[error("at least {needed} scenarios required, got {got}")]
    TooFewScenarios { needed: usize, got: usize },
    #[error(transparent)]
    Ternary(#[from] TernaryError),
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum TernaryError {
    #[error("at least two policies are required, got {got}")]
    TooFewPolicies { got: usize },
    /// max equals min across policies in these dimensions.
    #[error("degenerate range in {dimensions:?}")]
    DegenerateRange { dimensions: Vec<ValueDimension> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiAgentModel {
    pub graph: WeightedGraph,
    pub value_nodes: BTreeMap<ValueDimension, NodeId>,
}

impl MultiAgentModel {
    pub fn compile(&self) -> Result<CompiledGraph, PolicyError> {
        let compiled = self.graph.compile(GraphProfile::MultiAgent)?;
        let mut seen = Vec::new();
        for d in ValueDimension::ALL {
            let id = self
                .value_nodes
                .get(&d)
                .ok_or_else(|| PolicyError::InvalidModel(format!("no node mapped to {d}")))?;
            let node = self
                .graph
                .nodes
                .get(id)
                .ok_or_else(|| PolicyError::InvalidModel(format!("{d} node {id} does not exist")))?;
            if node.kind != d.node_kind() {
                return Err(PolicyError::InvalidModel(format!("{d} node {id} has kind {:?}", node.kind)));
            }
            if seen.contains(&id) {
                return Err(PolicyError::InvalidModel(format!("{id} mapped to more than one dimension")));
            }
            seen.push(id);
        }
        Ok(compiled)
    }

    fn node(&self, d: ValueDimension) -> &str {
        &self.value_nodes[&d]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyScenario {
    pub id: String,
    pub label: String,
    pub inputs: BTreeMap<NodeId, f64>,
    #[serde(default)]
    pub allocation: bool,
}

impl PolicyScenario {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let invalid = |reason: String| PolicyError::InvalidScenario { id: self.id.clone(), reason };
        for (k, v) in &self.inputs {
            if !v.is_finite() || *v < 0.0 {
                return Err(invalid(format!("input {k} = {v} must be finite and non-negative")));
            }
        }
        if self.allocation {
            let sum: f64 = self.inputs.values().sum();
            if (sum - 1.0).abs() > ALLOCATION_TOLERANCE {
                return Err(invalid(format!("allocation sums to {sum}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn assignment(&self) -> InputAssignment {
        InputAssignment::new(self.inputs.clone())
    }
}

/// Raw, range-scaled and simplex coordinates of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TernaryPoint {
    pub raw: Triple,
    pub scaled: Triple,
    /// Absent when the scaled values sum to zero.
    pub simplex: Option<Triple>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Plottable,
    /// Scaled values sum to a negative number; coordinates still sum to one
    /// but the point lies outside the triangle.
    NegativeSum,
    /// Scaled values sum to zero; no simplex coordinates.
    ZeroSum,
}

impl TernaryPoint {
    pub fn is_plottable(&self) -> bool {
        self.status == PointStatus::Plottable
    }
}

/// How the first normalization step treats the numerator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `y / (max - min)`.
    #[default]
    Range,
    /// `(y - min) / (max - min)`, bounded to `[0, 1]`.
    Minmax,
}

/// Value-node outputs `y_soc, y_env, y_eco` of one policy.
pub fn evaluate_policy(model: &MultiAgentModel, scenario: &PolicyScenario) -> Result<Triple, PolicyError> {
    let compiled = model.compile()?;
    evaluate_compiled(model, &compiled, scenario)
}

fn evaluate_compiled(
    model: &MultiAgentModel,
    compiled: &CompiledGraph,
    scenario: &PolicyScenario,
) -> Result<Triple, PolicyError> {
    scenario.validate()?;
    let values = compiled.evaluate(&scenario.assignment())?;
    let mut out = Triple::default();
    for d in ValueDimension::ALL {
        out[d] = values[model.node(d)];
    }
    Ok(out)
}

/// Evaluates a batch of scenarios in parallel. Results are in input order
/// and identical to sequential evaluation.
pub fn evaluate_batch(
    model: &MultiAgentModel,
    scenarios: &[PolicyScenario],
) -> Result<Vec<Triple>, PolicyError> {
    let compiled = model.compile()?;
    scenarios
        .par_iter()
        .map(|s| evaluate_compiled(model, &compiled, s))
        .collect()
}

/// Two-step normalization of raw value triples onto the ternary simplex.
pub fn normalize_ternary<K: Clone>(
    points: &[(K, Triple)],
    mode: ScaleMode,
) -> Result<Vec<(K, TernaryPoint)>, TernaryError> {
    if points.len() < 2 {
        return Err(TernaryError::TooFewPolicies { got: points.len() });
    }
    let mut min = Triple::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut max = Triple::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, raw) in points {
        for d in ValueDimension::ALL {
            min[d] = min[d].min(raw[d]);
            max[d] = max[d].max(raw[d]);
        }
    }
    let degenerate: Vec<ValueDimension> =
        ValueDimension::ALL.into_iter().filter(|&d| max[d] == min[d]).collect();
    if !degenerate.is_empty() {
        return Err(TernaryError::DegenerateRange { dimensions: degenerate });
    }
    Ok(points
        .iter()
        .map(|(key, raw)| {
            let scaled = raw.map(|d, y| {
                let shift = if mode == ScaleMode::Minmax { min[d] } else { 0.0 };
                (y - shift) / (max[d] - min[d])
            });
            let total = scaled.sum();
            let (simplex, status) = if total == 0.0 {
                (None, PointStatus::ZeroSum)
            } else {
                let s = scaled.map(|_, v| v / total);
                let status = if total < 0.0 { PointStatus::NegativeSum } else { PointStatus::Plottable };
                (Some(s), status)
            };
            (key.clone(), TernaryPoint { raw: *raw, scaled, simplex, status })
        })
        .collect())
}

/// Sensitivity of each value node to each input, `input -> dimension -> dy/dx`.
///
/// Under linear propagation the result does not depend on the scenario; the
/// scenario is validated and kept for labeling.
pub fn policy_sensitivity(
    model: &MultiAgentModel,
    scenario: &PolicyScenario,
) -> Result<SensitivityBlock, PolicyError> {
    let compiled = model.compile()?;
    scenario.validate()?;
    sensitivity_block(model, &compiled, &scenario.id)
}

fn sensitivity_block(
    model: &MultiAgentModel,
    compiled: &CompiledGraph,
    scenario_id: &str,
) -> Result<SensitivityBlock, PolicyError> {
    let mut by_input: BTreeMap<NodeId, Triple> = BTreeMap::new();
    for d in ValueDimension::ALL {
        for (input, s) in compiled.input_sensitivities(model.node(d))? {
            by_input.entry(input).or_default()[d] = s;
        }
    }
    Ok(SensitivityBlock { scenario_id: scenario_id.to_string(), by_input })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBlock {
    pub scenario_id: String,
    pub by_input: BTreeMap<NodeId, Triple>,
}

impl SensitivityBlock {
    pub fn get(&self, input: &str, d: ValueDimension) -> Option<f64> {
        self.by_input.get(input).map(|t| t[d])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub id: String,
    pub label: String,
    /// Input values in the order of [`ComparisonTable::input_columns`].
    pub inputs: Vec<f64>,
    pub raw: Triple,
    pub simplex: Option<Triple>,
    pub status: Option<PointStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub input_columns: Vec<NodeId>,
    pub rows: Vec<ComparisonRow>,
    /// Set when the policy set cannot be normalized; rows then carry raw values only.
    pub ternary_error: Option<TernaryError>,
    pub sensitivity: SensitivityBlock,
}

/// Side-by-side inputs, raw values and simplex coordinates, plus the
/// sensitivity block of `selected` (the first scenario when `None`).
pub fn compare_policies(
    model: &MultiAgentModel,
    scenarios: &[PolicyScenario],
    selected: Option<&str>,
    mode: ScaleMode,
) -> Result<ComparisonTable, PolicyError> {
    if scenarios.len() < 2 {
        return Err(PolicyError::TooFewScenarios { needed: 2, got: scenarios.len() });
    }
    let compiled = model.compile()?;
    let raws = scenarios
        .iter()
        .map(|s| evaluate_compiled(model, &compiled, s))
        .collect::<Result<Vec<_>, _>>()?;
    let keyed: Vec<(usize, Triple)> = raws.iter().copied().enumerate().collect();
    let (points, ternary_error) = match normalize_ternary(&keyed, mode) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e)),
    };
    let input_columns = model.graph.input_ids();
    let rows = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let point = points.as_ref().map(|p| &p[i].1);
            ComparisonRow {
                id: s.id.clone(),
                label: s.label.clone(),
                inputs: input_columns.iter().map(|c| s.inputs.get(c).copied().unwrap_or(0.0)).collect(),
                raw: raws[i],
                simplex: point.and_then(|p| p.simplex),
                status: point.map(|p| p.status),
            }
        })
        .collect();
    let selected = match selected {
        Some(id) => scenarios
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| PolicyError::UnknownScenario(id.to_string()))?,
        None => &scenarios[0],
    };
    let sensitivity = sensitivity_block(model, &compiled, &selected.id)?;
    Ok(ComparisonTable { input_columns, rows, ternary_error, sensitivity })
}

/// CSV with header `policy_id,soc,env,eco` holding simplex coordinates.
/// Policies without coordinates are written with empty cells.
pub fn ternary_csv(points: &[(String, TernaryPoint)]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["policy_id", "soc", "env", "eco"])?;
    for (id, p) in points {
        let cells: Vec<String> = match &p.simplex {
            Some(s) => vec![s.soc.to_string(), s.env.to_string(), s.eco.to_string()],
            None => vec![String::new(); 3],
        };
        w.write_record(std::iter::once(id.as_str()).chain(cells.iter().map(String::as_str)))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model(w_soc: f64, w_eco: f64) -> MultiAgentModel {
        MultiAgentModel {
            graph: WeightedGraph::new()
                .node("regional", "Regional finance", NodeKind::Input)
                .node("external", "External capital", NodeKind::Input)
                .node("soc", "Social", NodeKind::ValueSoc)
                .node("env", "Environmental", NodeKind::ValueEnv)
                .node("eco", "Economic", NodeKind::ValueEco)
                .edge("regional", "soc", w_soc)
                .edge("external", "eco", w_eco),
            value_nodes: [
                (ValueDimension::Soc, "soc".into()),
                (ValueDimension::Env, "env".into()),
                (ValueDimension::Eco, "eco".into()),
            ]
            .into(),
        }
    }

    fn scenario(id: &str, regional: f64, external: f64) -> PolicyScenario {
        PolicyScenario {
            id: id.into(),
            label: id.into(),
            inputs: [("regional".into(), regional), ("external".into(), external)].into(),
            allocation: false,
        }
    }

    #[test]
    fn zero_inputs_zero_values() {
        let v = evaluate_policy(&tiny_model(0.5, 0.3), &scenario("p", 0.0, 0.0)).unwrap();
        assert_eq!(v, Triple::default());
    }

    #[test]
    fn single_edge_propagation() {
        let v = evaluate_policy(&tiny_model(0.5, 0.3), &scenario("p", 0.7, 0.0)).unwrap();
        assert!((v.soc - 0.35).abs() < 1e-15);
    }

    #[test]
    fn weight_out_of_range_rejected() {
        let err = evaluate_policy(&tiny_model(1.5, 0.3), &scenario("p", 0.7, 0.0)).unwrap_err();
        assert!(matches!(err, PolicyError::Graph(GraphError::InvalidGraph(_))));
    }

    #[test]
    fn value_node_mapping_checked() {
        let mut m = tiny_model(0.5, 0.3);
        m.value_nodes.insert(ValueDimension::Env, "soc".into());
        assert!(matches!(m.compile(), Err(PolicyError::InvalidModel(_))));
        let mut m = tiny_model(0.5, 0.3);
        m.value_nodes.remove(&ValueDimension::Eco);
        assert!(matches!(m.compile(), Err(PolicyError::InvalidModel(_))));
    }

    #[test]
    fn allocation_validation() {
        let mut s = scenario("p", 0.7, 0.3);
        s.allocation = true;
        assert!(s.validate().is_ok());
        s.inputs.insert("regional".into(), 0.6);
        assert!(matches!(s.validate(), Err(PolicyError::InvalidScenario { .. })));
        let s = scenario("n", -0.1, 0.0);
        assert!(s.validate().is_err());
    }

    fn worked_example() -> Vec<(String, Triple)> {
        vec![
            ("1".into(), Triple::new(2.0, 3.0, 5.0)),
            ("2".into(), Triple::new(4.0, 1.0, 5.0)),
            ("3".into(), Triple::new(6.0, 2.0, 2.0)),
        ]
    }

    #[test]
    fn worked_ternary_example() {
        let pts = normalize_ternary(&worked_example(), ScaleMode::Range).unwrap();
        let s = pts[0].1.simplex.unwrap();
        assert!((s.soc - 0.136364).abs() < 1e-6);
        assert!((s.env - 0.409091).abs() < 1e-6);
        assert!((s.eco - 0.454545).abs() < 1e-6);
        assert_eq!(pts[0].1.scaled, Triple::new(0.5, 1.5, 5.0 / 3.0));
        for (_, p) in &pts {
            assert!((p.simplex.unwrap().sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn minmax_mode_bounds_scaled_values() {
        let pts = normalize_ternary(&worked_example(), ScaleMode::Minmax).unwrap();
        assert_eq!(pts[0].1.scaled, Triple::new(0.0, 1.0, 1.0));
        for (_, p) in &pts {
            for d in ValueDimension::ALL {
                assert!((0.0..=1.0).contains(&p.scaled[d]));
            }
        }
    }

    #[test]
    fn single_policy_is_rejected() {
        let pts = vec![("1".to_string(), Triple::new(1.0, 2.0, 3.0))];
        assert_eq!(normalize_ternary(&pts, ScaleMode::Range), Err(TernaryError::TooFewPolicies { got: 1 }));
        let same = vec![pts[0].clone(), ("2".to_string(), Triple::new(1.0, 5.0, 3.0))];
        assert_eq!(
            normalize_ternary(&same, ScaleMode::Range),
            Err(TernaryError::DegenerateRange { dimensions: vec![ValueDimension::Soc, ValueDimension::Eco] })
        );
    }

    #[test]
    fn dimension_scaling_leaves_coordinates() {
        let base = normalize_ternary(&worked_example(), ScaleMode::Range).unwrap();
        let scaled: Vec<_> = worked_example()
            .into_iter()
            .map(|(k, t)| (k, Triple { env: t.env * 10.0, ..t }))
            .collect();
        let after = normalize_ternary(&scaled, ScaleMode::Range).unwrap();
        for ((_, a), (_, b)) in base.iter().zip(&after) {
            for d in ValueDimension::ALL {
                assert!((a.scaled[d] - b.scaled[d]).abs() < 1e-12);
                assert!((a.simplex.unwrap()[d] - b.simplex.unwrap()[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_and_negative_sums_are_flagged() {
        let pts = vec![
            ("z".to_string(), Triple::new(1.0, -1.0, 0.0)),
            ("n".to_string(), Triple::new(-1.0, -1.0, -1.0)),
            ("p".to_string(), Triple::new(1.0, 1.0, 1.0)),
        ];
        let out = normalize_ternary(&pts, ScaleMode::Range).unwrap();
        assert_eq!(out[0].1.status, PointStatus::ZeroSum);
        assert_eq!(out[0].1.simplex, None);
        assert_eq!(out[1].1.status, PointStatus::NegativeSum);
        assert!((out[1].1.simplex.unwrap().sum() - 1.0).abs() < 1e-12);
        assert!(out[2].1.is_plottable());
    }

    #[test]
    fn sensitivity_entries() {
        let m = tiny_model(0.5, -0.4);
        let block = policy_sensitivity(&m, &scenario("p", 0.2, 0.8)).unwrap();
        assert_eq!(block.get("external", ValueDimension::Eco), Some(-0.4));
        assert_eq!(block.get("external", ValueDimension::Env), Some(0.0));
        assert_eq!(block.get("regional", ValueDimension::Soc), Some(0.5));
    }

    #[test]
    fn identical_scenarios_compare_degenerate() {
        let m = tiny_model(0.5, 0.3);
        let t = compare_policies(&m, &[scenario("a", 0.5, 0.5), scenario("b", 0.5, 0.5)], None, ScaleMode::Range)
            .unwrap();
        assert_eq!(t.rows[0].inputs, t.rows[1].inputs);
        assert_eq!(t.rows[0].raw, t.rows[1].raw);
        assert_eq!(
            t.ternary_error,
            Some(TernaryError::DegenerateRange { dimensions: ValueDimension::ALL.to_vec() })
        );
        assert!(compare_policies(&m, &[scenario("a", 0.5, 0.5)], None, ScaleMode::Range).is_err());
    }

    #[test]
    fn csv_layout() {
        let pts = normalize_ternary(&worked_example(), ScaleMode::Range).unwrap();
        let csv = ternary_csv(&pts).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("policy_id,soc,env,eco"));
        assert!(lines.next().unwrap().starts_with("1,0.13636"));
    }
}
