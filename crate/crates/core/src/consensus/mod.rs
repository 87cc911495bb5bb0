//! Consensus-building facilitation.
//!
//! [`analysis`] derives the three consensusable proposals from participant
//! preferences; [`session`] drives the facilitation loop as an event-sourced
//! state machine; [`oracle`] holds brute-force reference implementations used
//! to cross-check the analysis.

pub mod analysis;
pub mod oracle;
pub mod session;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{
    analyze, borda_weight, compromise_exploration, dispersion, kendall_tau, permissible_meeting,
    sublated_creation, CompromiseConfig, CompromiseProposal, ConsensusProposals, ParticipantDistance,
    PermissibleProposal, SelectionMode, SublatedProposal,
};
pub use session::{AnalysisConfig, Approval, Issue, SessionError, SessionEvent, SessionPhase, SessionState};

pub type ChoiceId = String;
pub type FactorId = String;
pub type ParticipantId = String;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", content = "detail", rename_all = "snake_case")]
pub enum ConsensusError {
    #[error("rankings or profiles are over different choice sets: {0}")]
    MismatchedDomains(String),
    #[error("no preference profiles")]
    EmptyProfiles,
    #[error("factor catalog is empty")]
    EmptyCatalog,
    #[error("invalid profile for {participant}: {reason}")]
    InvalidProfile { participant: ParticipantId, reason: String },
    #[error("invalid choice set: {0}")]
    InvalidChoiceSet(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub id: ChoiceId,
    pub label: String,
    #[serde(default)]
    pub factors: Vec<FactorId>,
}

/// Policy choices on the table and the factor catalog they are built from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceSet {
    pub choices: Vec<Choice>,
    pub factors: BTreeMap<FactorId, String>,
}

impl ChoiceSet {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.choices.is_empty() {
            return Err(ConsensusError::InvalidChoiceSet("no choices".into()));
        }
        let mut ids = BTreeSet::new();
        for c in &self.choices {
            if !ids.insert(c.id.as_str()) {
                return Err(ConsensusError::InvalidChoiceSet(format!("duplicate choice id {}", c.id)));
            }
            for f in &c.factors {
                if !self.factors.contains_key(f) {
                    return Err(ConsensusError::InvalidChoiceSet(format!(
                        "choice {} references unknown factor {f}",
                        c.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn choice_ids(&self) -> BTreeSet<&str> {
        self.choices.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Choice> {
        self.choices.iter().find(|c| c.id == id)
    }
}

/// One participant's preferences: total order, permissible top-k prefix and
/// factor importance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceProfile {
    pub participant: ParticipantId,
    pub order: Vec<ChoiceId>,
    pub permissible_k: usize,
    #[serde(default)]
    pub factor_importance: BTreeMap<FactorId, f64>,
}

impl PreferenceProfile {
    pub fn new(participant: &str, order: &[&str], permissible_k: usize) -> Self {
        Self {
            participant: participant.into(),
            order: order.iter().map(|s| s.to_string()).collect(),
            permissible_k,
            factor_importance: BTreeMap::new(),
        }
    }

    /// 1-based position of `choice` in the order.
    pub fn rank_of(&self, choice: &str) -> Option<usize> {
        self.order.iter().position(|c| c == choice).map(|p| p + 1)
    }

    fn invalid(&self, reason: impl Into<String>) -> ConsensusError {
        ConsensusError::InvalidProfile { participant: self.participant.clone(), reason: reason.into() }
    }

    /// Checks internal consistency: the order has no repeats and the
    /// permissible prefix and importances are in range.
    pub fn validate_shape(&self) -> Result<(), ConsensusError> {
        let unique: BTreeSet<&String> = self.order.iter().collect();
        if unique.len() != self.order.len() {
            return Err(self.invalid("order contains a repeated choice"));
        }
        if self.order.is_empty() {
            return Err(self.invalid("order is empty"));
        }
        if self.permissible_k < 1 || self.permissible_k > self.order.len() {
            return Err(self.invalid(format!(
                "permissible_k must be between 1 and {}, got {}",
                self.order.len(),
                self.permissible_k
            )));
        }
        for (f, v) in &self.factor_importance {
            if !(0.0..=1.0).contains(v) {
                return Err(self.invalid(format!("importance of {f} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Checks the profile against a choice set: the order must be a
    /// permutation of its choices and importances must cover exactly the
    /// factor catalog.
    pub fn validate_against(&self, set: &ChoiceSet) -> Result<(), ConsensusError> {
        self.validate_shape()?;
        let mine: BTreeSet<&str> = self.order.iter().map(String::as_str).collect();
        if mine != set.choice_ids() {
            return Err(ConsensusError::MismatchedDomains(format!(
                "order of {} is not a permutation of the choice set",
                self.participant
            )));
        }
        if let Some(f) = self.factor_importance.keys().find(|f| !set.factors.contains_key(*f)) {
            return Err(ConsensusError::MismatchedDomains(format!(
                "{} rates unknown factor {f}",
                self.participant
            )));
        }
        if let Some(f) = set.factors.keys().find(|f| !self.factor_importance.contains_key(*f)) {
            return Err(ConsensusError::MismatchedDomains(format!(
                "{} gives no importance for factor {f}",
                self.participant
            )));
        }
        Ok(())
    }
}

/// Common choice domain of a non-empty profile list, sorted by id.
pub(crate) fn common_domain(profiles: &[PreferenceProfile]) -> Result<Vec<ChoiceId>, ConsensusError> {
    let first = profiles.first().ok_or(ConsensusError::EmptyProfiles)?;
    for p in profiles {
        p.validate_shape()?;
    }
    let mut domain: Vec<ChoiceId> = first.order.clone();
    domain.sort();
    for p in &profiles[1..] {
        let mut other = p.order.clone();
        other.sort();
        if other != domain {
            return Err(ConsensusError::MismatchedDomains(format!(
                "{} and {} rank different choices",
                first.participant, p.participant
            )));
        }
    }
    Ok(domain)
}
