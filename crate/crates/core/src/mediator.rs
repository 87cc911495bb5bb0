//! Avatar motions for the facilitator, individual participants and the
//! participant group, and their derivation from a consensus session.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{dispersion, Approval, ParticipantId, SessionPhase, SessionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MediatorRole {
    Facilitator,
    Participant,
    ParticipantGroup,
}

impl MediatorRole {
    pub const ALL: [MediatorRole; 3] = [MediatorRole::Facilitator, MediatorRole::Participant, MediatorRole::ParticipantGroup];
}

impl fmt::Display for MediatorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AvatarStyle {
    Geometry,
    Humanoid,
    Chick,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionCode {
    pub number: u8,
    pub name: String,
    pub role: MediatorRole,
    pub avatar_style: AvatarStyle,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum MediatorError {
    #[error("no {name} motion for {role}")]
    UndefinedMotion { role: MediatorRole, name: String },
    #[error("unknown motion name {0}")]
    UnknownName(String),
    #[error("no motion #{number} for {role}")]
    UndefinedNumber { role: MediatorRole, number: u8 },
}

/// One row of the motion table; `None` where the role has no such motion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionRow {
    pub number: u8,
    pub facilitator: Option<String>,
    pub participant: Option<String>,
    pub group: Option<String>,
}

impl MotionRow {
    pub fn name_for(&self, role: MediatorRole) -> Option<&str> {
        match role {
            MediatorRole::Facilitator => self.facilitator.as_deref(),
            MediatorRole::Participant => self.participant.as_deref(),
            MediatorRole::ParticipantGroup => self.group.as_deref(),
        }
    }

    fn names(&self) -> impl Iterator<Item = &str> {
        [&self.facilitator, &self.participant, &self.group].into_iter().flatten().map(String::as_str)
    }
}

const MOTION_TABLE: &str = include_str!("../data/motions.json");

pub fn motion_table() -> &'static [MotionRow] {
    static CELL: OnceLock<Vec<MotionRow>> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(MOTION_TABLE).expect("shipped motion table parses"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediatorConfig {
    /// Group looks scattered above this fraction of the largest possible
    /// mean pairwise Kendall distance.
    pub scattered_fraction: f64,
    /// Group looks ripe at or below this fraction.
    pub ripe_fraction: f64,
    pub styles: BTreeMap<MediatorRole, AvatarStyle>,
}

impl Default for MediatorConfig {
    fn default() -> Self {
        Self {
            scattered_fraction: 0.5,
            ripe_fraction: 0.2,
            styles: [
                (MediatorRole::Facilitator, AvatarStyle::Chick),
                (MediatorRole::Participant, AvatarStyle::Humanoid),
                (MediatorRole::ParticipantGroup, AvatarStyle::Geometry),
            ]
            .into(),
        }
    }
}

impl MediatorConfig {
    fn style(&self, role: MediatorRole) -> AvatarStyle {
        self.styles.get(&role).copied().unwrap_or(match role {
            MediatorRole::Facilitator => AvatarStyle::Chick,
            MediatorRole::Participant => AvatarStyle::Humanoid,
            MediatorRole::ParticipantGroup => AvatarStyle::Geometry,
        })
    }

    /// Looks a motion up by name, case-insensitively. The two names sharing a
    /// row (such as Compromise and Consensus) are interchangeable for any role
    /// that has that row.
    pub fn motion_for(&self, role: MediatorRole, name: &str) -> Result<MotionCode, MediatorError> {
        let row = motion_table()
            .iter()
            .find(|r| r.names().any(|n| n.eq_ignore_ascii_case(name)))
            .ok_or_else(|| MediatorError::UnknownName(name.to_string()))?;
        self.code(role, row.number)
            .map_err(|_| MediatorError::UndefinedMotion { role, name: name.to_string() })
    }

    pub fn code(&self, role: MediatorRole, number: u8) -> Result<MotionCode, MediatorError> {
        motion_table()
            .iter()
            .find(|r| r.number == number)
            .and_then(|r| r.name_for(role))
            .map(|name| MotionCode { number, name: name.to_string(), role, avatar_style: self.style(role) })
            .ok_or(MediatorError::UndefinedNumber { role, number })
    }

    fn must(&self, role: MediatorRole, number: u8) -> MotionCode {
        self.code(role, number).expect("rule refers to a defined motion")
    }
}

pub fn motion_for(role: MediatorRole, name: &str) -> Result<MotionCode, MediatorError> {
    MediatorConfig::default().motion_for(role, name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMotions {
    pub facilitator: MotionCode,
    pub group: Option<MotionCode>,
    pub participants: BTreeMap<ParticipantId, MotionCode>,
}

pub fn session_motions(state: &SessionState, config: &MediatorConfig) -> SessionMotions {
    use MediatorRole::*;
    use SessionPhase as P;
    let facilitator = config.must(
        Facilitator,
        match state.phase {
            P::IssueSetting => 2,
            P::PreferenceCollection => 1,
            P::Analysis => 4,
            P::Facilitation => 3,
            P::ApprovalRound => 10,
            P::Consensus => 4,
            P::Modified => 8,
        },
    );

    let profiles: Vec<_> = state.profiles.values().cloned().collect();
    let group = match state.phase {
        P::Consensus => Some(16),
        P::Modified if state.approvals.values().all(|v| *v == Approval::Reject) => Some(15),
        P::Modified => Some(14),
        _ if profiles.len() >= 2 => {
            let d = dispersion(&profiles);
            if d > config.scattered_fraction {
                Some(13)
            } else if d <= config.ripe_fraction {
                Some(10)
            } else {
                None
            }
        }
        _ => None,
    }
    .map(|n| config.must(ParticipantGroup, n));

    let participants = state
        .roster()
        .iter()
        .map(|p| {
            let number = match (state.phase, state.approvals.get(p)) {
                (P::Consensus, _) => {
                    let top = state.profiles.get(p).and_then(|prof| prof.order.first());
                    if top.is_some() && top != state.called.as_ref() {
                        16
                    } else {
                        11
                    }
                }
                (_, Some(Approval::Approve)) => 11,
                (_, Some(Approval::Reject)) => 12,
                _ => 4,
            };
            (p.clone(), config.must(Participant, number))
        })
        .collect();

    SessionMotions { facilitator, group, participants }
}
