//! Project documents: every artifact of one policy project in a single JSON
//! file with a canonical byte layout.
//!
//! Canonical form is pretty-printed JSON with object keys sorted and numbers
//! in shortest round-trip notation, followed by a newline. Loading a
//! canonical file and saving it again reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::behavior::{
    CooperationModel, FeatureCatalog, FeatureVector, InterventionPlan, MonitoringLog, SubjectRegistry,
    SustainabilitySettings,
};
use crate::consensus::{ChoiceSet, SessionEvent, SessionState};
use crate::graph::NodeKind;
use crate::impact::LogicModel;
use crate::policy::{MultiAgentModel, PolicyScenario};
use crate::svo::SvoRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("schema_version {found:?} is not supported (supported: {SCHEMA_VERSION})")]
    UnsupportedSchema { found: Option<i64> },
    #[error("{}", join(.0))]
    ValidationFailure(Vec<ValidationIssue>),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn join(issues: &[ValidationIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl ProjectError {
    pub fn issues(&self) -> &[ValidationIssue] {
        match self {
            ProjectError::ValidationFailure(v) => v,
            _ => &[],
        }
    }
}

/// Behavior-change settings of a project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorConfig {
    pub model: CooperationModel,
    /// Feature catalog; the shipped one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureCatalog>,
    pub baseline: FeatureVector,
    #[serde(default)]
    pub plans: Vec<InterventionPlan>,
    #[serde(default)]
    pub sustainability: SustainabilitySettings,
    #[serde(default)]
    pub subjects: SubjectRegistry,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub monitoring: BTreeMap<String, MonitoringLog>,
}

impl BehaviorConfig {
    pub fn catalog(&self) -> &FeatureCatalog {
        self.features.as_ref().unwrap_or_else(|| FeatureCatalog::standard())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Project {
    pub schema_version: u32,
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logic_model: Option<LogicModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_agent: Option<MultiAgentModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<PolicyScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<ChoiceSet>,
    /// Session histories by session id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sessions: BTreeMap<String, Vec<SessionEvent>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub svo_results: BTreeMap<String, SvoRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorConfig>,
}

impl Project {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            name: name.into(),
            template: None,
            logic_model: None,
            multi_agent: None,
            scenarios: Vec::new(),
            choices: None,
            sessions: BTreeMap::new(),
            svo_results: BTreeMap::new(),
            behavior: None,
        }
    }

    /// Checks every artifact and the references between them.
    pub fn validate(&self) -> Result<(), ProjectError> {
        let mut issues = Vec::new();
        let mut push = |path: String, message: String| issues.push(ValidationIssue { path, message });

        if self.schema_version != SCHEMA_VERSION {
            push("schema_version".into(), format!("unsupported version {}", self.schema_version));
        }
        if !valid_id(&self.id) {
            push("id".into(), "must be non-empty and use only letters, digits, '-' and '_'".into());
        }
        if let Some(lm) = &self.logic_model {
            let report = lm.validate();
            for finding in &report.findings {
                push("logic_model.graph".into(), finding.to_string());
            }
            if report.is_valid() {
                if let Err(e) = lm.compile() {
                    push("logic_model".into(), e.to_string());
                }
            }
            if let Some(adv) = &lm.advanced_settings {
                if let Err(e) = adv.validate() {
                    push("logic_model.advanced_settings".into(), e.to_string());
                }
                for id in adv.inputs.keys() {
                    if lm.graph.nodes.get(id).map(|n| n.kind) != Some(NodeKind::Input) {
                        push(format!("logic_model.advanced_settings.inputs.{id}"), "not an input node".into());
                    }
                }
            }
        }
        if let Some(ma) = &self.multi_agent {
            if let Err(e) = ma.compile() {
                push("multi_agent".into(), e.to_string());
            }
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if let Err(e) = s.validate() {
                push(format!("scenarios[{i}]"), e.to_string());
            }
            match &self.multi_agent {
                Some(ma) => {
                    for k in s.inputs.keys() {
                        if ma.graph.nodes.get(k).map(|n| n.kind) != Some(NodeKind::Input) {
                            push(format!("scenarios[{i}].inputs.{k}"), "not an input of the multi-agent model".into());
                        }
                    }
                }
                None => push(format!("scenarios[{i}]"), "scenarios need a multi-agent model".into()),
            }
        }
        if let Some(c) = &self.choices {
            if let Err(e) = c.validate() {
                push("choices".into(), e.to_string());
            }
        }
        for (id, events) in &self.sessions {
            if !valid_id(id) {
                push(format!("sessions.{id}"), "invalid session id".into());
            }
            let mut state = SessionState::new();
            for (i, e) in events.iter().enumerate() {
                if let Err(err) = state.apply(e.clone()) {
                    push(format!("sessions.{id}[{i}]"), err.to_string());
                    break;
                }
            }
        }
        for (id, record) in &self.svo_results {
            if *id != record.participant {
                push(format!("svo_results.{id}"), format!("record belongs to {}", record.participant));
            }
        }
        if let Some(b) = &self.behavior {
            let catalog = b.catalog();
            if let Err(e) = catalog.validate() {
                push("behavior.features".into(), e.to_string());
            }
            if let Err(e) = b.model.validate(catalog) {
                push("behavior.model".into(), e.to_string());
            }
            if let Err(e) = catalog.complete(&b.baseline) {
                push("behavior.baseline".into(), e.to_string());
            }
            for (i, p) in b.plans.iter().enumerate() {
                if let Err(e) = p.apply(catalog, &b.baseline) {
                    push(format!("behavior.plans[{i}]"), e.to_string());
                }
            }
            for (id, x) in &b.subjects.subjects {
                if let Err(e) = catalog.complete(x) {
                    push(format!("behavior.subjects.subjects.{id}"), e.to_string());
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ProjectError::ValidationFailure(issues))
        }
    }
}

pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Canonical JSON text of any serializable value.
pub fn to_canonical<T: Serialize>(value: &T) -> String {
    // Value objects are BTreeMaps, so conversion sorts every key.
    let v = serde_json::to_value(value).expect("artifacts serialize to JSON");
    let mut out = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    out.push('\n');
    out
}

/// Validates and serializes a project.
pub fn save_project(project: &Project) -> Result<String, ProjectError> {
    project.validate()?;
    Ok(to_canonical(project))
}

pub fn save_project_file(project: &Project, path: &Path) -> Result<(), ProjectError> {
    let text = save_project(project)?;
    crate::store::write_atomic(path, text.as_bytes())?;
    Ok(())
}

/// Parses a project, checking the schema version before anything else and
/// reporting structural errors by JSON path.
pub fn load_project(text: &str) -> Result<Project, ProjectError> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        ProjectError::ValidationFailure(vec![ValidationIssue { path: "$".into(), message: e.to_string() }])
    })?;
    let found = value.get("schema_version").and_then(Value::as_i64);
    if found != Some(i64::from(SCHEMA_VERSION)) {
        return Err(ProjectError::UnsupportedSchema { found });
    }
    let project: Project = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ProjectError::ValidationFailure(vec![ValidationIssue { path, message: e.into_inner().to_string() }])
    })?;
    project.validate()?;
    Ok(project)
}

pub fn load_project_file(path: &Path) -> Result<Project, ProjectError> {
    load_project(&std::fs::read_to_string(path)?)
}

const TEMPLATES: [(&str, &str); 5] = [
    ("unused-stock", include_str!("../data/templates/unused-stock.json")),
    ("municipal-planning", include_str!("../data/templates/municipal-planning.json")),
    ("citizen-council", include_str!("../data/templates/citizen-council.json")),
    ("cooperative-management", include_str!("../data/templates/cooperative-management.json")),
    ("local-supply-chain", include_str!("../data/templates/local-supply-chain.json")),
];

pub fn template_names() -> impl Iterator<Item = &'static str> {
    TEMPLATES.iter().map(|(n, _)| *n)
}

pub fn template_text(name: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// A new project seeded from a shipped template.
pub fn from_template(name: &str, id: &str, project_name: &str) -> Result<Project, ProjectError> {
    let text = template_text(name).ok_or_else(|| {
        ProjectError::ValidationFailure(vec![ValidationIssue { path: "template".into(), message: format!("unknown template {name}") }])
    })?;
    let mut p = load_project(text)?;
    p.id = id.to_string();
    p.name = project_name.to_string();
    p.template = Some(name.to_string());
    p.validate()?;
    Ok(p)
}
