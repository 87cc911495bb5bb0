use axum::extract::{Path, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::Json;
use chrono::Utc;
use coos_core::project::{from_template, save_project, template_names, Project};
use coos_core::store::ProjectSummary;
use serde::Deserialize;

use super::{update_project, Body};
use crate::auth::{Caller, Role};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewProject {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub template: Option<String>,
}

pub async fn templates(_: Caller) -> Json<Vec<&'static str>> {
    Json(template_names().collect())
}

pub async fn list(State(state): State<AppState>, _: Caller) -> ApiResult<Json<Vec<ProjectSummary>>> {
    Ok(Json(state.store().list_projects()?))
}

async fn store_new(state: &AppState, project: Project) -> ApiResult<(StatusCode, Json<Project>)> {
    let _w = state.writer(&project.id).await;
    state.store().create_project(&project, Utc::now())?;
    Ok((StatusCode::CREATED, Json(state.store().export_project(&project.id)?)))
}

pub async fn create(
    State(state): State<AppState>,
    caller: Caller,
    Body(req): Body<NewProject>,
) -> ApiResult<(StatusCode, Json<Project>)> {
    caller.require(&[Role::Convener])?;
    let project = match &req.template {
        Some(t) => from_template(t, &req.id, &req.name)?,
        None => Project::new(req.id, req.name),
    };
    store_new(&state, project).await
}

/// Stores a complete project document, seeding session logs from its
/// histories.
pub async fn import(
    State(state): State<AppState>,
    caller: Caller,
    Body(project): Body<Project>,
) -> ApiResult<(StatusCode, Json<Project>)> {
    caller.require(&[Role::Convener])?;
    store_new(&state, project).await
}

pub async fn get(State(state): State<AppState>, _: Caller, Path(id): Path<String>) -> ApiResult<Json<Project>> {
    let _w = state.writer(&id).await;
    Ok(Json(state.store().export_project(&id)?))
}

/// Replaces the document. Session histories are kept in their logs and any
/// in the body are ignored.
pub async fn replace(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(project): Body<Project>,
) -> ApiResult<Json<Project>> {
    caller.require(&[Role::Convener])?;
    if project.id != id {
        return Err(ApiError::bad_request(format!("body id {} does not match {id}", project.id)));
    }
    update_project(&state, &id, |p| {
        *p = project;
        p.sessions.clear();
        Ok(())
    })
    .await?;
    let _w = state.writer(&id).await;
    Ok(Json(state.store().export_project(&id)?))
}

pub async fn delete(State(state): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<StatusCode> {
    caller.require(&[Role::Convener])?;
    let _w = state.writer(&id).await;
    state.store().delete_project(&id)?;
    state.forget_project(&id);
    Ok(StatusCode::NO_CONTENT)
}

/// The canonical project file, byte-identical to a CLI save.
pub async fn export(
    State(state): State<AppState>,
    _: Caller,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    let _w = state.writer(&id).await;
    let text = save_project(&state.store().export_project(&id)?)?;
    Ok(([(CONTENT_TYPE, "application/json")], text))
}
