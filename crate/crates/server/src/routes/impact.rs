use std::collections::BTreeMap;

use axum::extract::{Path, State};
use axum::response::Response;
use axum::Json;
use coos_core::graph::ValidationReport;
use coos_core::impact::{
    advanced_trajectory, export_choices, rank_inputs, sensitivities_csv, AdvancedSettings, Edit, LogicModel,
    PolicyChoiceRef,
};
use coos_core::project::Project;
use serde::{Deserialize, Serialize};

use super::{json_or_csv, update_project, Body, FormatQuery, Query};
use crate::auth::{Caller, Role};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

fn model_of(project: &Project) -> ApiResult<&LogicModel> {
    project.logic_model.as_ref().ok_or_else(|| ApiError::conflict("NotConfigured", "project has no logic model"))
}

fn load(state: &AppState, id: &str) -> ApiResult<LogicModel> {
    model_of(&state.store().get_project(id)?).cloned()
}

pub async fn get_model(State(state): State<AppState>, _: Caller, Path(id): Path<String>) -> ApiResult<Json<LogicModel>> {
    Ok(Json(load(&state, &id)?))
}

pub async fn put_model(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(model): Body<LogicModel>,
) -> ApiResult<Json<LogicModel>> {
    caller.require(&[Role::Convener])?;
    update_project(&state, &id, |p| {
        p.logic_model = Some(model.clone());
        Ok(())
    })
    .await?;
    Ok(Json(model))
}

/// Applies one authoring step; a rejected step leaves the model untouched.
pub async fn edit(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(edit): Body<Edit>,
) -> ApiResult<Json<LogicModel>> {
    caller.require(&[Role::Convener])?;
    let model = update_project(&state, &id, |p| {
        let next = model_of(p)?.apply_edit(&edit)?;
        p.logic_model = Some(next.clone());
        Ok(next)
    })
    .await?;
    Ok(Json(model))
}

pub async fn validate(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<ValidationReport>> {
    Ok(Json(load(&state, &id)?.validate()))
}

pub async fn rank(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
    Query(format): Query<FormatQuery>,
) -> ApiResult<Response> {
    let ranked = rank_inputs(&load(&state, &id)?)?;
    let csv = match format.csv()? {
        true => Some(sensitivities_csv(&ranked).map_err(|e| ApiError::internal(e.to_string()))?),
        false => None,
    };
    Ok(json_or_csv(&ranked, csv))
}

#[derive(Debug, Deserialize)]
pub struct TopK {
    #[serde(default)]
    pub top_k: Option<usize>,
}

/// The highest-ranked inputs as policy choices; all of them by default.
pub async fn choices(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
    Query(q): Query<TopK>,
) -> ApiResult<Json<Vec<PolicyChoiceRef>>> {
    let model = load(&state, &id)?;
    let top_k = match q.top_k {
        Some(k) => k,
        None => model.graph.input_ids().len(),
    };
    Ok(Json(export_choices(&model, top_k)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub settings: AdvancedSettings,
    /// Impact value per period.
    pub impact: BTreeMap<u32, f64>,
}

fn run(model: &LogicModel, settings: AdvancedSettings) -> ApiResult<Json<Trajectory>> {
    let impact = advanced_trajectory(model, &settings)?;
    Ok(Json(Trajectory { settings, impact }))
}

pub async fn stored_trajectory(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<Trajectory>> {
    let model = load(&state, &id)?;
    let settings = model
        .advanced_settings
        .clone()
        .ok_or_else(|| ApiError::conflict("NotConfigured", "logic model has no advanced settings"))?;
    run(&model, settings)
}

/// Trajectory for ad hoc settings; nothing is stored.
pub async fn trajectory(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
    Body(settings): Body<AdvancedSettings>,
) -> ApiResult<Json<Trajectory>> {
    run(&load(&state, &id)?, settings)
}

pub async fn put_settings(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(settings): Body<AdvancedSettings>,
) -> ApiResult<Json<Trajectory>> {
    caller.require(&[Role::Convener])?;
    let model = update_project(&state, &id, |p| {
        let model = p.logic_model.as_mut().ok_or_else(|| ApiError::conflict("NotConfigured", "project has no logic model"))?;
        advanced_trajectory(model, &settings)?;
        model.advanced_settings = Some(settings.clone());
        Ok(model.clone())
    })
    .await?;
    run(&model, settings)
}
