use std::collections::BTreeMap;

use axum::extract::{Path, State};
use axum::response::Response;
use axum::Json;
use coos_core::behavior::{
    feature_sensitivity, parameter_table, predict as predict_rate, simulate_interventions, suggest as suggest_plan,
    FeatureCatalog, FeatureVector, InterventionPlan, MonitoringLog, MonitoringRecord, ParameterRow,
    SuggestionReport,
};
use coos_core::project::{BehaviorConfig, Project};
use serde::{Deserialize, Serialize};

use super::{json_or_csv, update_project, Body, FormatQuery, Query};
use crate::auth::{Caller, Role};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

pub async fn catalog(_: Caller) -> Json<&'static FeatureCatalog> {
    Json(FeatureCatalog::standard())
}

pub async fn parameters(_: Caller) -> Json<&'static [ParameterRow]> {
    Json(parameter_table())
}

fn config_of(project: &Project) -> ApiResult<&BehaviorConfig> {
    project.behavior.as_ref().ok_or_else(|| ApiError::conflict("NotConfigured", "project has no behavior settings"))
}

fn load(state: &AppState, id: &str, caller: &Caller) -> ApiResult<BehaviorConfig> {
    caller.require(&[Role::Convener])?;
    config_of(&state.store().get_project(id)?).cloned()
}

/// Who a prediction is for: explicit features, a registered subject, or
/// the project baseline.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    #[serde(default)]
    pub features: Option<FeatureVector>,
    #[serde(default)]
    pub subject: Option<String>,
}

impl Target {
    fn resolve(&self, config: &BehaviorConfig) -> ApiResult<FeatureVector> {
        match (&self.features, &self.subject) {
            (Some(_), Some(_)) => Err(ApiError::bad_request("give features or subject, not both")),
            (Some(x), None) => Ok(x.clone()),
            (None, Some(s)) => config
                .subjects
                .subjects
                .get(s)
                .cloned()
                .ok_or_else(|| ApiError::not_found(format!("subject {s} not found"))),
            (None, None) => Ok(config.baseline.clone()),
        }
    }
}

pub async fn get_config(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<BehaviorConfig>> {
    Ok(Json(load(&state, &id, &caller)?))
}

pub async fn put_config(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(config): Body<BehaviorConfig>,
) -> ApiResult<Json<BehaviorConfig>> {
    caller.require(&[Role::Convener])?;
    update_project(&state, &id, |p| {
        p.behavior = Some(config.clone());
        Ok(())
    })
    .await?;
    Ok(Json(config))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub rate: f64,
    pub filled_defaults: Vec<String>,
    pub sensitivity: BTreeMap<String, f64>,
}

pub async fn predict(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(target): Body<Target>,
) -> ApiResult<Json<PredictionReport>> {
    let config = load(&state, &id, &caller)?;
    let x = target.resolve(&config)?;
    let catalog = config.catalog();
    let p = predict_rate(&config.model, catalog, &x)?;
    let (full, _) = catalog.complete(&x)?;
    let sensitivity = feature_sensitivity(&config.model, catalog, &full)?;
    Ok(Json(PredictionReport { rate: p.rate, filled_defaults: p.filled_defaults, sensitivity }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    #[serde(flatten)]
    pub target: Target,
    /// The project's plans when absent.
    #[serde(default)]
    pub plans: Option<Vec<InterventionPlan>>,
}

/// Plans ranked by predicted gain; `?format=csv` gives `plan_id,rate,delta`.
pub async fn simulate(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(format): Query<FormatQuery>,
    Body(req): Body<SimulateRequest>,
) -> ApiResult<Response> {
    let config = load(&state, &id, &caller)?;
    let x = req.target.resolve(&config)?;
    let plans = req.plans.as_deref().unwrap_or(&config.plans);
    let report = simulate_interventions(&config.model, config.catalog(), &x, plans)?;
    let csv = format.csv()?.then(|| report.to_csv());
    Ok(json_or_csv(&report, csv))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestRequest {
    pub plan_id: String,
    #[serde(flatten)]
    pub target: Target,
}

pub async fn suggest(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(req): Body<SuggestRequest>,
) -> ApiResult<Json<SuggestionReport>> {
    let config = load(&state, &id, &caller)?;
    let x = req.target.resolve(&config)?;
    let plan = config
        .plans
        .iter()
        .find(|p| p.id == req.plan_id)
        .ok_or_else(|| ApiError::not_found(format!("plan {} not found", req.plan_id)))?;
    Ok(Json(suggest_plan(&config.model, config.catalog(), &x, plan, config.sustainability)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportReport {
    pub updated: Vec<String>,
}

/// Copies every stored SVO result into the subject registry.
pub async fn import_svo(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<ImportReport>> {
    caller.require(&[Role::Convener])?;
    let updated = update_project(&state, &id, |p| {
        let results = p.svo_results.clone();
        let config = p
            .behavior
            .as_mut()
            .ok_or_else(|| ApiError::conflict("NotConfigured", "project has no behavior settings"))?;
        let catalog = config.features.clone();
        let catalog = catalog.as_ref().unwrap_or_else(|| FeatureCatalog::standard());
        Ok(config.subjects.import_svo(catalog, results.iter().map(|(k, r)| (k.as_str(), &r.result)))?)
    })
    .await?;
    Ok(Json(ImportReport { updated }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub t: u32,
    pub observed: f64,
    /// Required for a subject's first observation.
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationReport {
    pub record: MonitoringRecord,
    pub needs_retargeting: bool,
}

pub async fn observe(
    State(state): State<AppState>,
    caller: Caller,
    Path((id, subject)): Path<(String, String)>,
    Body(obs): Body<Observation>,
) -> ApiResult<Json<ObservationReport>> {
    caller.require(&[Role::Convener])?;
    if !obs.observed.is_finite() {
        return Err(ApiError::bad_request("observed rate must be finite"));
    }
    let report = update_project(&state, &id, |p| {
        let config = p
            .behavior
            .as_mut()
            .ok_or_else(|| ApiError::conflict("NotConfigured", "project has no behavior settings"))?;
        let log = match config.monitoring.get_mut(&subject) {
            Some(log) => log,
            None => {
                let threshold = obs
                    .threshold
                    .ok_or_else(|| ApiError::bad_request("threshold is required for a new subject"))?;
                config.monitoring.entry(subject.clone()).or_insert(MonitoringLog::new(&subject, threshold))
            }
        };
        let record = log.observe(obs.t, obs.observed);
        Ok(ObservationReport { record, needs_retargeting: log.needs_retargeting() })
    })
    .await?;
    Ok(Json(report))
}
