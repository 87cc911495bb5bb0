use axum::extract::{Path, State};
use axum::Json;
use coos_core::consensus::SessionState;
use coos_core::mediator::{motion_table, session_motions, MediatorConfig, MotionRow, SessionMotions};

use crate::auth::Caller;
use crate::error::ApiResult;
use crate::state::AppState;

pub async fn table(_: Caller) -> Json<&'static [MotionRow]> {
    Json(motion_table())
}

pub async fn session(
    State(state): State<AppState>,
    _: Caller,
    Path((project, session)): Path<(String, String)>,
) -> ApiResult<Json<SessionMotions>> {
    let log = {
        let _w = state.writer(&project).await;
        state.store().read_log(&project, &session)?
    };
    let s = SessionState::replay(log.iter().map(|l| &l.event))?;
    Ok(Json(session_motions(&s, &MediatorConfig::default())))
}
