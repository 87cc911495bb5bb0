use std::collections::BTreeMap;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use chrono::Utc;
use coos_core::consensus::{
    AnalysisConfig, Approval, ChoiceId, ChoiceSet, ConsensusProposals, Issue, ParticipantId, PreferenceProfile,
    SessionEvent, SessionPhase, SessionState,
};
use coos_core::mediator::{session_motions, MediatorConfig, SessionMotions};
use coos_core::store::LoggedEvent;
use serde::{Deserialize, Serialize};
use tokio::time::Instant;

use super::{update_project, Body, Query};
use crate::auth::{Caller, Role};
use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

/// A session snapshot with the number of events behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub project: String,
    pub session: String,
    pub seq: u64,
    pub state: SessionState,
    pub motions: SessionMotions,
}

impl SessionView {
    fn new(project: &str, session: &str, log: &[LoggedEvent]) -> ApiResult<Self> {
        let state = SessionState::replay(log.iter().map(|l| &l.event))?;
        Ok(Self::from_state(project, session, log.len() as u64, state))
    }

    fn from_state(project: &str, session: &str, seq: u64, state: SessionState) -> Self {
        let motions = session_motions(&state, &MediatorConfig::default());
        Self { project: project.into(), session: session.into(), seq, state, motions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResults {
    pub project: String,
    pub session: String,
    pub phase: SessionPhase,
    pub round: u32,
    pub agenda: Option<String>,
    pub proposals: Option<ConsensusProposals>,
    pub called: Option<ChoiceId>,
    pub approvals: BTreeMap<ParticipantId, Approval>,
    pub history: Vec<LoggedEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitResponse {
    /// False when the wait timed out with nothing new.
    pub changed: bool,
    #[serde(flatten)]
    pub view: SessionView,
}

async fn read_log(state: &AppState, project: &str, session: &str) -> ApiResult<Vec<LoggedEvent>> {
    let _w = state.writer(project).await;
    Ok(state.store().read_log(project, session)?)
}

/// Checks the whole batch against the current state, then logs it and wakes
/// waiting clients. Either every event is logged or none.
async fn append(state: &AppState, project: &str, session: &str, events: Vec<SessionEvent>) -> ApiResult<SessionView> {
    let _w = state.writer(project).await;
    let store = state.store();
    let log = store.read_log(project, session)?;
    let mut next = SessionState::replay(log.iter().map(|l| &l.event))?;
    for e in &events {
        next.apply(e.clone())?;
    }
    let now = Utc::now();
    let mut seq = log.len() as u64;
    for e in events {
        seq = store.append_event(project, session, e, now)?.0.seq;
    }
    state.publish(project, session, seq);
    Ok(SessionView::from_state(project, session, seq, next))
}

fn authorize(caller: &Caller, event: &SessionEvent) -> ApiResult<()> {
    match event {
        SessionEvent::SubmitProfile { profile } => {
            caller.require(&[Role::Convener, Role::Participant])?;
            caller.acts_for(&profile.participant)
        }
        SessionEvent::CastApproval { participant, .. } => {
            caller.require(&[Role::Convener, Role::Participant])?;
            caller.acts_for(participant)
        }
        _ => caller.require(&[Role::Convener]),
    }
}

async fn submit(
    state: &AppState,
    caller: &Caller,
    project: &str,
    session: &str,
    events: Vec<SessionEvent>,
) -> ApiResult<Json<SessionView>> {
    for e in &events {
        authorize(caller, e)?;
    }
    Ok(Json(append(state, project, session, events).await?))
}

pub async fn get_choices(State(state): State<AppState>, _: Caller, Path(id): Path<String>) -> ApiResult<Json<ChoiceSet>> {
    state
        .store()
        .get_project(&id)?
        .choices
        .map(Json)
        .ok_or_else(|| ApiError::conflict("NotConfigured", "project has no choice set"))
}

pub async fn put_choices(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(choices): Body<ChoiceSet>,
) -> ApiResult<Json<ChoiceSet>> {
    caller.require(&[Role::Convener])?;
    update_project(&state, &id, |p| {
        p.choices = Some(choices.clone());
        Ok(())
    })
    .await?;
    Ok(Json(choices))
}

pub async fn list(State(state): State<AppState>, _: Caller, Path(id): Path<String>) -> ApiResult<Json<Vec<String>>> {
    if !state.store().has_project(&id) {
        return Err(ApiError::not_found(format!("project {id} not found")));
    }
    Ok(Json(state.store().list_sessions(&id)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    pub id: String,
}

pub async fn create(
    State(state): State<AppState>,
    caller: Caller,
    Path(project): Path<String>,
    Body(req): Body<NewSession>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    caller.require(&[Role::Convener])?;
    let _w = state.writer(&project).await;
    state.store().create_session(&project, &req.id)?;
    Ok((StatusCode::CREATED, Json(SessionView::new(&project, &req.id, &[])?)))
}

pub async fn view(
    State(state): State<AppState>,
    _: Caller,
    Path((project, session)): Path<(String, String)>,
) -> ApiResult<Json<SessionView>> {
    let log = read_log(&state, &project, &session).await?;
    Ok(Json(SessionView::new(&project, &session, &log)?))
}

pub async fn log(
    State(state): State<AppState>,
    _: Caller,
    Path((project, session)): Path<(String, String)>,
) -> ApiResult<Json<Vec<LoggedEvent>>> {
    Ok(Json(read_log(&state, &project, &session).await?))
}

/// Any session event; the role check depends on the event.
pub async fn event(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(event): Body<SessionEvent>,
) -> ApiResult<Json<SessionView>> {
    submit(&state, &caller, &project, &session, vec![event]).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueRequest {
    pub agenda: String,
    pub participants: Vec<ParticipantId>,
    /// The project's choice set when absent.
    #[serde(default)]
    pub choices: Option<ChoiceSet>,
    #[serde(default)]
    pub config: AnalysisConfig,
}

pub async fn issue(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(req): Body<IssueRequest>,
) -> ApiResult<Json<SessionView>> {
    caller.require(&[Role::Convener])?;
    let choices = match req.choices {
        Some(c) => c,
        None => state
            .store()
            .get_project(&project)?
            .choices
            .ok_or_else(|| ApiError::conflict("NotConfigured", "no choices given and the project has none"))?,
    };
    let issue = Issue { agenda: req.agenda, choices, participants: req.participants };
    submit(&state, &caller, &project, &session, vec![SessionEvent::FinalizeIssue { issue, config: req.config }]).await
}

pub async fn profile(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(profile): Body<PreferenceProfile>,
) -> ApiResult<Json<SessionView>> {
    submit(&state, &caller, &project, &session, vec![SessionEvent::SubmitProfile { profile }]).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequest {
    /// Start with profiles missing.
    #[serde(default)]
    pub facilitator_close: bool,
}

/// Closes preference collection and computes the three proposals.
pub async fn analysis(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(req): Body<AnalysisRequest>,
) -> ApiResult<Json<SessionView>> {
    let events =
        vec![SessionEvent::StartAnalysis { facilitator_close: req.facilitator_close }, SessionEvent::ComputeProposals];
    submit(&state, &caller, &project, &session, events).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallRequest {
    pub choice: ChoiceId,
}

pub async fn call(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(req): Body<CallRequest>,
) -> ApiResult<Json<SessionView>> {
    submit(&state, &caller, &project, &session, vec![SessionEvent::CallQuestion { choice: req.choice }]).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApprovalRequest {
    /// The caller when absent.
    #[serde(default)]
    pub participant: Option<ParticipantId>,
    pub vote: Approval,
}

pub async fn approval(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(req): Body<ApprovalRequest>,
) -> ApiResult<Json<SessionView>> {
    let participant = req.participant.unwrap_or_else(|| caller.id.clone());
    submit(&state, &caller, &project, &session, vec![SessionEvent::CastApproval { participant, vote: req.vote }]).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviseRequest {
    #[serde(default)]
    pub choices: Option<ChoiceSet>,
}

pub async fn revise(
    State(state): State<AppState>,
    caller: Caller,
    Path((project, session)): Path<(String, String)>,
    Body(req): Body<ReviseRequest>,
) -> ApiResult<Json<SessionView>> {
    submit(&state, &caller, &project, &session, vec![SessionEvent::ReviseChoices { choices: req.choices }]).await
}

pub async fn proposals(
    State(state): State<AppState>,
    _: Caller,
    Path((project, session)): Path<(String, String)>,
) -> ApiResult<Json<ConsensusProposals>> {
    let log = read_log(&state, &project, &session).await?;
    SessionView::new(&project, &session, &log)?
        .state
        .proposals
        .map(Json)
        .ok_or_else(|| ApiError::not_found("no proposals computed yet"))
}

/// Proposals, the approval outcome and the full event history.
pub async fn results(
    State(state): State<AppState>,
    _: Caller,
    Path((project, session)): Path<(String, String)>,
) -> ApiResult<Json<SessionResults>> {
    let log = read_log(&state, &project, &session).await?;
    let s = SessionView::new(&project, &session, &log)?.state;
    Ok(Json(SessionResults {
        project,
        session,
        phase: s.phase,
        round: s.round,
        agenda: s.issue.map(|i| i.agenda),
        proposals: s.proposals,
        called: s.called,
        approvals: s.approvals,
        history: log,
    }))
}

#[derive(Debug, Deserialize)]
pub struct WaitQuery {
    /// Last sequence number the client has seen.
    #[serde(default)]
    pub since: u64,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
}

/// Long poll: answers as soon as the session has more than `since` events,
/// or with `changed: false` when the timeout passes.
pub async fn wait(
    State(state): State<AppState>,
    _: Caller,
    Path((project, session)): Path<(String, String)>,
    Query(q): Query<WaitQuery>,
) -> ApiResult<Json<WaitResponse>> {
    let max = state.config().max_wait_ms;
    let deadline = Instant::now() + Duration::from_millis(q.timeout_ms.unwrap_or(max).min(max));
    let mut rx = state.subscribe(&project, &session, 0);
    loop {
        let log = read_log(&state, &project, &session).await?;
        let changed = log.len() as u64 > q.since;
        let respond = || -> ApiResult<Json<WaitResponse>> {
            Ok(Json(WaitResponse { changed, view: SessionView::new(&project, &session, &log)? }))
        };
        if changed {
            return respond();
        }
        match tokio::time::timeout_at(deadline, rx.changed()).await {
            Ok(Ok(())) => continue,
            Ok(Err(_)) | Err(_) => return respond(),
        }
    }
}
