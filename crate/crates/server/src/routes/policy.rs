use axum::extract::{Path, State};
use axum::response::Response;
use axum::Json;
use coos_core::policy::{
    compare_policies, evaluate_batch, normalize_ternary, policy_sensitivity, ternary_csv, ComparisonTable,
    MultiAgentModel, PolicyScenario, ScaleMode, SensitivityBlock, TernaryPoint, Triple,
};
use coos_core::project::Project;
use serde::{Deserialize, Serialize};

use super::{json_or_csv, update_project, Body, FormatQuery, Query};
use crate::auth::{Caller, Role};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

fn model_of(project: &Project) -> ApiResult<&MultiAgentModel> {
    project.multi_agent.as_ref().ok_or_else(|| ApiError::conflict("NotConfigured", "project has no multi-agent model"))
}

/// The named scenarios in the order given, or every scenario.
fn pick(project: &Project, ids: Option<&[String]>) -> ApiResult<Vec<PolicyScenario>> {
    match ids {
        None => Ok(project.scenarios.clone()),
        Some(ids) => ids
            .iter()
            .map(|id| {
                project
                    .scenarios
                    .iter()
                    .find(|s| &s.id == id)
                    .cloned()
                    .ok_or_else(|| ApiError::not_found(format!("scenario {id} not found")))
            })
            .collect(),
    }
}

pub async fn get_model(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<MultiAgentModel>> {
    Ok(Json(model_of(&state.store().get_project(&id)?)?.clone()))
}

pub async fn put_model(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(model): Body<MultiAgentModel>,
) -> ApiResult<Json<MultiAgentModel>> {
    caller.require(&[Role::Convener])?;
    update_project(&state, &id, |p| {
        p.multi_agent = Some(model.clone());
        Ok(())
    })
    .await?;
    Ok(Json(model))
}

pub async fn get_scenarios(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<PolicyScenario>>> {
    Ok(Json(state.store().get_project(&id)?.scenarios))
}

pub async fn put_scenarios(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(scenarios): Body<Vec<PolicyScenario>>,
) -> ApiResult<Json<Vec<PolicyScenario>>> {
    caller.require(&[Role::Convener])?;
    update_project(&state, &id, |p| {
        p.scenarios = scenarios.clone();
        Ok(())
    })
    .await?;
    Ok(Json(scenarios))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    #[serde(default)]
    pub scenarios: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPolicy {
    pub id: String,
    pub label: String,
    pub raw: Triple,
}

pub async fn evaluate(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
    Body(req): Body<EvaluateRequest>,
) -> ApiResult<Json<Vec<EvaluatedPolicy>>> {
    let project = state.store().get_project(&id)?;
    let scenarios = pick(&project, req.scenarios.as_deref())?;
    let raws = evaluate_batch(model_of(&project)?, &scenarios)?;
    Ok(Json(
        scenarios
            .into_iter()
            .zip(raws)
            .map(|(s, raw)| EvaluatedPolicy { id: s.id, label: s.label, raw })
            .collect(),
    ))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TernaryRequest {
    #[serde(default)]
    pub scenarios: Option<Vec<String>>,
    #[serde(default)]
    pub mode: ScaleMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TernaryRow {
    pub id: String,
    pub point: TernaryPoint,
}

pub async fn ternary(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
    Query(format): Query<FormatQuery>,
    Body(req): Body<TernaryRequest>,
) -> ApiResult<Response> {
    let project = state.store().get_project(&id)?;
    let scenarios = pick(&project, req.scenarios.as_deref())?;
    let raws = evaluate_batch(model_of(&project)?, &scenarios)?;
    let keyed: Vec<(String, Triple)> = scenarios.into_iter().map(|s| s.id).zip(raws).collect();
    let points = normalize_ternary(&keyed, req.mode)?;
    let csv = match format.csv()? {
        true => Some(ternary_csv(&points).map_err(|e| ApiError::internal(e.to_string()))?),
        false => None,
    };
    let rows: Vec<TernaryRow> = points.into_iter().map(|(id, point)| TernaryRow { id, point }).collect();
    Ok(json_or_csv(&rows, csv))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRequest {
    #[serde(default)]
    pub selected: Option<String>,
    #[serde(default)]
    pub mode: ScaleMode,
}

pub async fn compare(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
    Body(req): Body<CompareRequest>,
) -> ApiResult<Json<ComparisonTable>> {
    let project = state.store().get_project(&id)?;
    Ok(Json(compare_policies(model_of(&project)?, &project.scenarios, req.selected.as_deref(), req.mode)?))
}

pub async fn sensitivity(
    State(state): State<AppState>,
    _: Caller,
    Path((id, scenario)): Path<(String, String)>,
) -> ApiResult<Json<SensitivityBlock>> {
    let project = state.store().get_project(&id)?;
    let picked = pick(&project, Some(std::slice::from_ref(&scenario)))?;
    Ok(Json(policy_sensitivity(model_of(&project)?, &picked[0])?))
}
