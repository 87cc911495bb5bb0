//! Facilitation session as an event-sourced state machine.
//!
//! ```text
//! IssueSetting -> PreferenceCollection -> Analysis -> Facilitation -> ApprovalRound
//!                        ^                                              |      |
//!                        +------------------ Modified <-- any Reject ---+      +--> Consensus
//! ```
//!
//! Every accepted event is appended to `history`; [`SessionState::replay`]
//! folds a history back into the same state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::analysis::{analyze, CompromiseConfig, ConsensusProposals, SelectionMode};
use super::{ChoiceId, ChoiceSet, ConsensusError, ParticipantId, PreferenceProfile};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SessionPhase {
    #[default]
    IssueSetting,
    PreferenceCollection,
    Analysis,
    Facilitation,
    ApprovalRound,
    Consensus,
    Modified,
}

impl fmt::Display for SessionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approval {
    Approve,
    Reject,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub compromise: CompromiseConfig,
    #[serde(default)]
    pub selection: SelectionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Issue {
    pub agenda: String,
    pub choices: ChoiceSet,
    pub participants: Vec<ParticipantId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", deny_unknown_fields)]
pub enum SessionEvent {
    FinalizeIssue {
        issue: Issue,
        #[serde(default)]
        config: AnalysisConfig,
    },
    SubmitProfile {
        profile: PreferenceProfile,
    },
    StartAnalysis {
        #[serde(default)]
        facilitator_close: bool,
    },
    ComputeProposals,
    CallQuestion {
        choice: ChoiceId,
    },
    CastApproval {
        participant: ParticipantId,
        vote: Approval,
    },
    ReviseChoices {
        #[serde(default)]
        choices: Option<ChoiceSet>,
    },
}

impl SessionEvent {
    pub fn name(&self) -> &'static str {
        match self {
            SessionEvent::FinalizeIssue { .. } => "finalize_issue",
            SessionEvent::SubmitProfile { .. } => "submit_profile",
            SessionEvent::StartAnalysis { .. } => "start_analysis",
            SessionEvent::ComputeProposals => "compute_proposals",
            SessionEvent::CallQuestion { .. } => "call_question",
            SessionEvent::CastApproval { .. } => "cast_approval",
            SessionEvent::ReviseChoices { .. } => "revise_choices",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("{event} is not allowed in phase {phase}")]
    IllegalTransition { phase: SessionPhase, event: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Analysis(#[from] ConsensusError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionState {
    pub phase: SessionPhase,
    pub issue: Option<Issue>,
    pub config: AnalysisConfig,
    /// Number of completed Modified -> PreferenceCollection loops.
    pub round: u32,
    pub profiles: BTreeMap<ParticipantId, PreferenceProfile>,
    pub proposals: Option<ConsensusProposals>,
    /// Choice put to the approval round.
    pub called: Option<ChoiceId>,
    pub approvals: BTreeMap<ParticipantId, Approval>,
    pub history: Vec<SessionEvent>,
}

impl SessionState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds `events` from a fresh session.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a SessionEvent>) -> Result<Self, SessionError> {
        let mut state = Self::new();
        for e in events {
            state.apply(e.clone())?;
        }
        Ok(state)
    }

    /// Pure transition: returns the next state, leaving `self` untouched.
    pub fn step(&self, event: SessionEvent) -> Result<Self, SessionError> {
        let mut next = self.clone();
        next.apply(event)?;
        Ok(next)
    }

    pub fn roster(&self) -> &[ParticipantId] {
        self.issue.as_ref().map(|i| i.participants.as_slice()).unwrap_or_default()
    }

    pub fn all_profiles_in(&self) -> bool {
        let roster = self.roster();
        !roster.is_empty() && roster.iter().all(|p| self.profiles.contains_key(p))
    }

    /// Checks `event` against the current phase and applies it in place. A
    /// rejected event leaves the state unchanged.
    pub fn apply(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        use SessionEvent as E;
        use SessionPhase as P;
        let illegal = SessionError::IllegalTransition { phase: self.phase, event: event.name() };
        match (&event, self.phase) {
            (E::FinalizeIssue { issue, config }, P::IssueSetting) => {
                issue.choices.validate()?;
                let unique: BTreeSet<&ParticipantId> = issue.participants.iter().collect();
                if issue.participants.is_empty() || unique.len() != issue.participants.len() {
                    return Err(SessionError::Invalid("participants must be non-empty and unique".into()));
                }
                self.issue = Some(issue.clone());
                self.config = *config;
                self.phase = P::PreferenceCollection;
            }
            (E::SubmitProfile { profile }, P::PreferenceCollection) => {
                let issue = self.issue.as_ref().expect("issue set before collection");
                if !issue.participants.contains(&profile.participant) {
                    return Err(SessionError::Invalid(format!("{} is not a participant", profile.participant)));
                }
                profile.validate_against(&issue.choices)?;
                self.profiles.insert(profile.participant.clone(), profile.clone());
            }
            (E::StartAnalysis { facilitator_close }, P::PreferenceCollection) => {
                if self.profiles.is_empty() || !(*facilitator_close || self.all_profiles_in()) {
                    return Err(illegal);
                }
                self.phase = P::Analysis;
            }
            (E::ComputeProposals, P::Analysis) => {
                let issue = self.issue.as_ref().expect("issue set before analysis");
                let profiles: Vec<PreferenceProfile> = self.profiles.values().cloned().collect();
                self.proposals =
                    Some(analyze(&profiles, &issue.choices, self.config.compromise, self.config.selection)?);
                self.phase = P::Facilitation;
            }
            (E::CallQuestion { choice }, P::Facilitation) => {
                let issue = self.issue.as_ref().expect("issue set before facilitation");
                if issue.choices.get(choice).is_none() {
                    return Err(SessionError::Invalid(format!("unknown choice {choice}")));
                }
                self.called = Some(choice.clone());
                self.approvals.clear();
                self.phase = P::ApprovalRound;
            }
            (E::CastApproval { participant, vote }, P::ApprovalRound) => {
                if !self.roster().contains(participant) {
                    return Err(SessionError::Invalid(format!("{participant} is not a participant")));
                }
                if self.approvals.contains_key(participant) {
                    return Err(SessionError::Invalid(format!("{participant} has already voted")));
                }
                self.approvals.insert(participant.clone(), *vote);
                if self.roster().iter().all(|p| self.approvals.contains_key(p)) {
                    self.phase = if self.approvals.values().all(|v| *v == Approval::Approve) {
                        P::Consensus
                    } else {
                        P::Modified
                    };
                }
            }
            (E::ReviseChoices { choices }, P::Modified) => {
                if let Some(c) = choices {
                    c.validate()?;
                    self.issue.as_mut().expect("issue set").choices = c.clone();
                }
                self.profiles.clear();
                self.proposals = None;
                self.called = None;
                self.approvals.clear();
                self.round += 1;
                self.phase = P::PreferenceCollection;
            }
            _ => return Err(illegal),
        }
        self.history.push(event);
        Ok(())
    }
}
