use axum::http::StatusCode;
use axum::extract::State;
use axum::Json;
use chrono::Utc;

use super::Body;
use crate::auth::{AccountView, AuthMode, Caller, Login, MaybeCaller, Registration, Role, Session};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

/// Anyone may sign up as a participant or subject. Convener and operator
/// accounts need an operator, except for the very first account.
pub async fn register(
    State(state): State<AppState>,
    MaybeCaller(caller): MaybeCaller,
    Body(reg): Body<Registration>,
) -> ApiResult<(StatusCode, Json<AccountView>)> {
    let privileged = matches!(reg.role, Role::Convener | Role::Operator);
    if privileged && state.auth().has_accounts() {
        match caller {
            Some(c) => c.require(&[])?,
            None if state.auth().mode() == AuthMode::Open => {}
            None => return Err(ApiError::unauthorized("an operator token is required to create this account")),
        }
    }
    let view = tokio::task::spawn_blocking(move || state.auth().register(state.store(), reg))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(view)))
}

pub async fn login(State(state): State<AppState>, Body(login): Body<Login>) -> ApiResult<Json<Session>> {
    let session = tokio::task::spawn_blocking(move || state.auth().login(&login, Utc::now()))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(session))
}

pub async fn me(State(state): State<AppState>, caller: Caller) -> Json<AccountView> {
    Json(state.auth().account(&caller.id).unwrap_or(AccountView {
        id: caller.id.clone(),
        display_name: caller.id,
        role: caller.role,
    }))
}
