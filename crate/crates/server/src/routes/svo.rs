use std::collections::BTreeMap;

use axum::extract::{Path, State};
use axum::Json;
use chrono::Utc;
use coos_core::svo::{score as score_responses, Instrument, Questionnaire, SliderItem, SliderResponse, SvoRecord, SvoResult};
use serde::Deserialize;

use super::Body;
use crate::auth::{Caller, Role};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

const TAKERS: &[Role] = &[Role::Convener, Role::Participant, Role::Subject];

pub async fn instrument(_: Caller) -> Json<&'static Instrument> {
    Json(Instrument::standard())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub responses: Vec<SliderResponse>,
}

/// Scores a full answer set without storing anything.
pub async fn score(_: Caller, Body(req): Body<ScoreRequest>) -> ApiResult<Json<SvoResult>> {
    Ok(Json(score_responses(Instrument::standard(), &req.responses)?))
}

pub async fn results(
    State(state): State<AppState>,
    caller: Caller,
    Path(project): Path<String>,
) -> ApiResult<Json<BTreeMap<String, SvoRecord>>> {
    caller.require(&[Role::Convener])?;
    Ok(Json(state.store().get_project(&project)?.svo_results))
}

fn current(state: &AppState, project: &str, participant: &str) -> ApiResult<Questionnaire> {
    Ok(state.store().get_questionnaire(project, participant)?.unwrap_or_else(|| Questionnaire::new(participant)))
}

/// Runs one questionnaire step under the project's writer lock and stores
/// the result. Failed steps store nothing.
async fn step(
    state: &AppState,
    caller: &Caller,
    project: &str,
    participant: &str,
    f: impl FnOnce(&mut Questionnaire) -> ApiResult<()>,
) -> ApiResult<Json<Questionnaire>> {
    caller.require(TAKERS)?;
    caller.acts_for(participant)?;
    let _w = state.writer(project).await;
    let mut q = current(state, project, participant)?;
    f(&mut q)?;
    state.store().put_questionnaire(project, &q)?;
    Ok(Json(q))
}

pub async fn questionnaire(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
) -> ApiResult<Json<Questionnaire>> {
    caller.require(TAKERS)?;
    caller.acts_for(&participant)?;
    Ok(Json(current(&state, &project, &participant)?))
}

pub async fn consent(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
) -> ApiResult<Json<Questionnaire>> {
    step(&state, &caller, &project, &participant, |q| Ok(q.consent(Utc::now())?)).await
}

/// The items to present; refused before consent.
pub async fn items(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
) -> ApiResult<Json<Vec<SliderItem>>> {
    caller.require(TAKERS)?;
    caller.acts_for(&participant)?;
    let q = current(&state, &project, &participant)?;
    Ok(Json(q.items(Instrument::standard())?.to_vec()))
}

pub async fn explanation(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
) -> ApiResult<Json<Questionnaire>> {
    step(&state, &caller, &project, &participant, |q| Ok(q.finish_explanation()?)).await
}

pub async fn practice(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
    Body(response): Body<SliderResponse>,
) -> ApiResult<Json<Questionnaire>> {
    step(&state, &caller, &project, &participant, |q| Ok(q.practice(response)?)).await
}

pub async fn practice_done(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
) -> ApiResult<Json<Questionnaire>> {
    step(&state, &caller, &project, &participant, |q| Ok(q.finish_practice()?)).await
}

/// Records one or more answers; all are checked before any is kept.
pub async fn respond(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
    Body(responses): Body<Vec<SliderResponse>>,
) -> ApiResult<Json<Questionnaire>> {
    if responses.is_empty() {
        return Err(ApiError::bad_request("no responses given"));
    }
    step(&state, &caller, &project, &participant, |q| {
        let mut next = q.clone();
        for r in responses {
            next.respond(Instrument::standard(), r)?;
        }
        *q = next;
        Ok(())
    })
    .await
}

/// Scores the questionnaire and files the record with the project.
pub async fn complete(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, participant)): Path<(String, String)>,
) -> ApiResult<Json<SvoRecord>> {
    caller.require(TAKERS)?;
    caller.acts_for(&participant)?;
    let _w = state.writer(&project).await;
    let store = state.store();
    let mut q = current(&state, &project, &participant)?;
    let record = q.complete(Instrument::standard(), Utc::now())?.clone();
    let mut doc = store.get_project(&project)?;
    doc.svo_results.insert(participant, record.clone());
    store.put_project(&doc)?;
    store.put_questionnaire(&project, &q)?;
    Ok(Json(record))
}
