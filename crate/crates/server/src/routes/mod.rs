use axum::extract::{FromRequest, FromRequestParts};
use axum::http::header::CONTENT_TYPE;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coos_core::project::Project;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

mod account;
mod behavior;
mod consensus;
mod impact;
mod mediator;
mod policy;
mod projects;
mod svo;

pub use consensus::{SessionResults, SessionView, WaitResponse};

/// JSON body whose rejection is reported as an [`ApiError`].
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Body<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct Query<T>(pub T);

#[derive(Debug, Default, Deserialize)]
pub struct FormatQuery {
    #[serde(default)]
    pub format: Option<String>,
}

impl FormatQuery {
    pub fn csv(&self) -> ApiResult<bool> {
        match self.format.as_deref() {
            None | Some("json") => Ok(false),
            Some("csv") => Ok(true),
            Some(other) => Err(ApiError::bad_request(format!("unknown format {other}"))),
        }
    }
}

pub fn csv_response(text: String) -> Response {
    ([(CONTENT_TYPE, "text/csv; charset=utf-8")], text).into_response()
}

pub fn json_or_csv<T: Serialize>(value: &T, csv: Option<String>) -> Response {
    match csv {
        Some(text) => csv_response(text),
        None => Json(value).into_response(),
    }
}

/// Read-modify-write of a stored project under its writer lock. The
/// document is validated before it is written.
pub async fn update_project<R>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut Project) -> ApiResult<R>,
) -> ApiResult<R> {
    let _w = state.writer(id).await;
    let mut project = state.store().get_project(id)?;
    let out = f(&mut project)?;
    state.store().put_project(&project)?;
    Ok(out)
}

pub fn router(state: AppState) -> Router {
    let p = "/projects/{project}";
    let s = "/projects/{project}/sessions/{session}";
    let q = "/projects/{project}/svo/{participant}";
    Router::new()
        .route("/health", get(|| async { Json(serde_json::json!({ "status": "ok" })) }))
        .route("/auth/register", post(account::register))
        .route("/auth/login", post(account::login))
        .route("/auth/me", get(account::me))
        .route("/templates", get(projects::templates))
        .route("/projects", get(projects::list).post(projects::create))
        .route("/projects/import", post(projects::import))
        .route(p, get(projects::get).put(projects::replace).delete(projects::delete))
        .route(&format!("{p}/export"), get(projects::export))
        .route(&format!("{p}/logic-model"), get(impact::get_model).put(impact::put_model))
        .route(&format!("{p}/logic-model/edit"), post(impact::edit))
        .route(&format!("{p}/logic-model/validate"), get(impact::validate))
        .route(&format!("{p}/logic-model/rank"), get(impact::rank))
        .route(&format!("{p}/logic-model/choices"), get(impact::choices))
        .route(
            &format!("{p}/logic-model/advanced"),
            get(impact::stored_trajectory).put(impact::put_settings).post(impact::trajectory),
        )
        .route(&format!("{p}/multi-agent"), get(policy::get_model).put(policy::put_model))
        .route(&format!("{p}/scenarios"), get(policy::get_scenarios).put(policy::put_scenarios))
        .route(&format!("{p}/sim/evaluate"), post(policy::evaluate))
        .route(&format!("{p}/sim/ternary"), post(policy::ternary))
        .route(&format!("{p}/sim/compare"), post(policy::compare))
        .route(&format!("{p}/sim/sensitivity/{{scenario}}"), get(policy::sensitivity))
        .route(&format!("{p}/choices"), get(consensus::get_choices).put(consensus::put_choices))
        .route(&format!("{p}/sessions"), get(consensus::list).post(consensus::create))
        .route(s, get(consensus::view))
        .route(&format!("{s}/log"), get(consensus::log))
        .route(&format!("{s}/events"), post(consensus::event))
        .route(&format!("{s}/issue"), post(consensus::issue))
        .route(&format!("{s}/profiles"), post(consensus::profile))
        .route(&format!("{s}/analysis"), post(consensus::analysis))
        .route(&format!("{s}/call"), post(consensus::call))
        .route(&format!("{s}/approvals"), post(consensus::approval))
        .route(&format!("{s}/revise"), post(consensus::revise))
        .route(&format!("{s}/proposals"), get(consensus::proposals))
        .route(&format!("{s}/results"), get(consensus::results))
        .route(&format!("{s}/wait"), get(consensus::wait))
        .route(&format!("{s}/motions"), get(mediator::session))
        .route("/svo/instrument", get(svo::instrument))
        .route("/svo/score", post(svo::score))
        .route(&format!("{p}/svo"), get(svo::results))
        .route(q, get(svo::questionnaire))
        .route(&format!("{q}/consent"), post(svo::consent))
        .route(&format!("{q}/items"), get(svo::items))
        .route(&format!("{q}/explanation"), post(svo::explanation))
        .route(&format!("{q}/practice"), post(svo::practice))
        .route(&format!("{q}/practice/done"), post(svo::practice_done))
        .route(&format!("{q}/responses"), post(svo::respond))
        .route(&format!("{q}/complete"), post(svo::complete))
        .route("/behavior/catalog", get(behavior::catalog))
        .route("/behavior/parameters", get(behavior::parameters))
        .route(&format!("{p}/behavior"), get(behavior::get_config).put(behavior::put_config))
        .route(&format!("{p}/behavior/predict"), post(behavior::predict))
        .route(&format!("{p}/behavior/simulate"), post(behavior::simulate))
        .route(&format!("{p}/behavior/suggest"), post(behavior::suggest))
        .route(&format!("{p}/behavior/import-svo"), post(behavior::import_svo))
        .route(&format!("{p}/behavior/monitoring/{{subject}}"), post(behavior::observe))
        .route("/mediator/motions", get(mediator::table))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed here")
        })
        .with_state(state)
}
