//! Permissible meeting analysis, compromise choice exploration and sublated
//! choice creation.
//!
//! Tie rules are fixed so that every result is reproducible:
//!
//! * permissible meeting: lowest widening cost, then lowest rank sum, then
//!   ascending choice id;
//! * compromise exploration: lowest total Kendall distance, then lowest
//!   maximum per-participant distance, then the lexicographically smallest
//!   ranking (compared as a sequence of choice ids);
//! * sublated creation: factors ordered by descending score, then ascending id.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{common_domain, ChoiceId, ChoiceSet, ConsensusError, FactorId, ParticipantId, PreferenceProfile};

/// Number of discordant pairs between two rankings of the same set, i.e. the
/// minimum number of adjacent swaps turning one into the other.
pub fn kendall_tau<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<usize, ConsensusError> {
    let pos_b: HashMap<&str, usize> = b.iter().enumerate().map(|(i, c)| (c.as_ref(), i)).collect();
    if a.len() != b.len() || pos_b.len() != b.len() {
        return Err(ConsensusError::MismatchedDomains("rankings differ in length or repeat items".into()));
    }
    let mapped = a
        .iter()
        .map(|c| pos_b.get(c.as_ref()).copied())
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| ConsensusError::MismatchedDomains("rankings contain different items".into()))?;
    let mut seen = vec![false; mapped.len()];
    for &p in &mapped {
        if std::mem::replace(&mut seen[p], true) {
            return Err(ConsensusError::MismatchedDomains("ranking repeats an item".into()));
        }
    }
    Ok(inversions(&mapped))
}

fn inversions(seq: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                count += 1;
            }
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissibleProposal {
    pub choice: ChoiceId,
    pub widening_cost: usize,
    /// Widening cost of every choice.
    pub costs: BTreeMap<ChoiceId, usize>,
}

/// The choice reachable with the fewest total widenings of the participants'
/// permissible prefixes: `cost(c) = sum_i max(0, rank_i(c) - k_i)`.
pub fn permissible_meeting(profiles: &[PreferenceProfile]) -> Result<PermissibleProposal, ConsensusError> {
    let domain = common_domain(profiles)?;
    let mut costs = BTreeMap::new();
    let mut best: Option<(usize, usize, &ChoiceId)> = None;
    for c in &domain {
        let (mut cost, mut rank_sum) = (0, 0);
        for p in profiles {
            let rank = p.rank_of(c).expect("domain checked");
            cost += rank.saturating_sub(p.permissible_k);
            rank_sum += rank;
        }
        costs.insert(c.clone(), cost);
        // Domain is sorted, so a strict improvement keeps the smallest id on ties.
        if best.is_none_or(|(bc, br, _)| (cost, rank_sum) < (bc, br)) {
            best = Some((cost, rank_sum, c));
        }
    }
    let (widening_cost, _, choice) = best.expect("domain is non-empty");
    Ok(PermissibleProposal { choice: choice.clone(), widening_cost, costs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompromiseConfig {
    /// Largest number of choices searched exhaustively.
    pub exhaustive_limit: usize,
}

impl Default for CompromiseConfig {
    fn default() -> Self {
        Self { exhaustive_limit: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantDistance {
    pub participant: ParticipantId,
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompromiseProposal {
    pub ranking: Vec<ChoiceId>,
    pub top: ChoiceId,
    pub total_distance: usize,
    pub max_distance: usize,
    pub distances: Vec<ParticipantDistance>,
    /// True when the choice count exceeded the exhaustive limit and a local
    /// search produced the ranking.
    pub approximate: bool,
}

/// Precomputed positions: `pos[i][c]` is where participant `i` places choice `c`.
struct Positions {
    pos: Vec<Vec<usize>>,
    m: usize,
}

impl Positions {
    fn new(profiles: &[PreferenceProfile], domain: &[ChoiceId]) -> Self {
        let index: HashMap<&str, usize> = domain.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let pos = profiles
            .iter()
            .map(|p| {
                let mut row = vec![0; domain.len()];
                for (rank, c) in p.order.iter().enumerate() {
                    row[index[c.as_str()]] = rank;
                }
                row
            })
            .collect();
        Self { pos, m: domain.len() }
    }

    fn distances(&self, ranking: &[usize]) -> Vec<usize> {
        self.pos
            .iter()
            .map(|row| inversions(&ranking.iter().map(|&c| row[c]).collect::<Vec<_>>()))
            .collect()
    }
}

/// Ordering key: (total, max, ranking).
fn key(distances: &[usize]) -> (usize, usize) {
    (distances.iter().sum(), distances.iter().copied().max().unwrap_or(0))
}

struct Search<'a> {
    positions: &'a Positions,
    prefix: Vec<usize>,
    used: Vec<bool>,
    dist: Vec<usize>,
    best: Option<((usize, usize), Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self) {
        if self.prefix.len() == self.positions.m {
            let k = key(&self.dist);
            if self.best.as_ref().is_none_or(|(bk, _)| k < *bk) {
                self.best = Some((k, self.prefix.clone()));
            }
            return;
        }
        for c in 0..self.positions.m {
            if self.used[c] {
                continue;
            }
            let added: Vec<usize> = self
                .positions
                .pos
                .iter()
                .map(|row| self.prefix.iter().filter(|&&x| row[x] > row[c]).count())
                .collect();
            for (d, a) in self.dist.iter_mut().zip(&added) {
                *d += a;
            }
            // Distances only grow, so a partial key worse than the best is final.
            let prune = self.best.as_ref().is_some_and(|(bk, _)| key(&self.dist) > *bk);
            if !prune {
                self.used[c] = true;
                self.prefix.push(c);
                self.run();
                self.prefix.pop();
                self.used[c] = false;
            }
            for (d, a) in self.dist.iter_mut().zip(&added) {
                *d -= a;
            }
        }
    }
}

fn local_search(positions: &Positions, starts: Vec<Vec<usize>>) -> Vec<usize> {
    let mut best: Option<((usize, usize), Vec<usize>)> = None;
    for start in starts {
        let mut current = start;
        let mut current_key = key(&positions.distances(&current));
        loop {
            let mut improved: Option<((usize, usize), Vec<usize>)> = None;
            for from in 0..current.len() {
                for to in 0..current.len() {
                    if from == to {
                        continue;
                    }
                    let mut cand = current.clone();
                    let item = cand.remove(from);
                    cand.insert(to, item);
                    let k = key(&positions.distances(&cand));
                    let better = match &improved {
                        None => (k, &cand) < (current_key, &current),
                        Some((ik, ic)) => (k, &cand) < (*ik, ic),
                    };
                    if better {
                        improved = Some((k, cand));
                    }
                }
            }
            match improved {
                Some((k, cand)) => {
                    current = cand;
                    current_key = k;
                }
                None => break,
            }
        }
        if best.as_ref().is_none_or(|(bk, br)| (current_key, &current) < (*bk, br)) {
            best = Some((current_key, current));
        }
    }
    best.expect("at least one start").1
}

/// Ranking that minimizes the total Kendall distance to all participants'
/// orders, with the maximum per-participant distance as the balancing
/// secondary objective.
pub fn compromise_exploration(
    profiles: &[PreferenceProfile],
    config: CompromiseConfig,
) -> Result<CompromiseProposal, ConsensusError> {
    let domain = common_domain(profiles)?;
    let positions = Positions::new(profiles, &domain);
    let m = domain.len();
    let approximate = m > config.exhaustive_limit;
    let ranking: Vec<usize> = if approximate {
        let mut starts: Vec<Vec<usize>> = positions
            .pos
            .iter()
            .map(|row| {
                let mut r: Vec<usize> = (0..m).collect();
                r.sort_by_key(|&c| row[c]);
                r
            })
            .collect();
        let mut borda: Vec<usize> = (0..m).collect();
        borda.sort_by_key(|&c| (positions.pos.iter().map(|row| row[c]).sum::<usize>(), c));
        starts.push(borda);
        local_search(&positions, starts)
    } else {
        let mut search = Search {
            positions: &positions,
            prefix: Vec::with_capacity(m),
            used: vec![false; m],
            dist: vec![0; profiles.len()],
            best: None,
        };
        search.run();
        search.best.expect("m >= 1").1
    };
    let dist = positions.distances(&ranking);
    let (total_distance, max_distance) = key(&dist);
    let ranking: Vec<ChoiceId> = ranking.into_iter().map(|c| domain[c].clone()).collect();
    Ok(CompromiseProposal {
        top: ranking[0].clone(),
        ranking,
        total_distance,
        max_distance,
        distances: profiles
            .iter()
            .zip(dist)
            .map(|(p, distance)| ParticipantDistance { participant: p.participant.clone(), distance })
            .collect(),
        approximate,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// The `k` best factors, `k` = lower median of factor counts per choice.
    #[default]
    TopK,
    /// Factors scoring strictly above the mean score.
    AboveMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublatedProposal {
    pub factor_scores: BTreeMap<FactorId, f64>,
    /// Selected factors, best first.
    pub selected: Vec<FactorId>,
    pub label: String,
    pub mode: SelectionMode,
}

/// Borda weight of a 1-based rank among `m` choices; the last choice still
/// weighs 1.
pub fn borda_weight(m: usize, rank: usize) -> usize {
    m - rank + 1
}

/// Factor composite built from importance-weighted, rank-weighted factor
/// incidence:
/// `score(f) = sum_i h_i(f) * sum_{c contains f} B_i(c)`, `B_i(c) = m - rank_i(c) + 1`.
pub fn sublated_creation(
    profiles: &[PreferenceProfile],
    choices: &ChoiceSet,
    mode: SelectionMode,
) -> Result<SublatedProposal, ConsensusError> {
    if choices.factors.is_empty() {
        return Err(ConsensusError::EmptyCatalog);
    }
    choices.validate()?;
    if profiles.is_empty() {
        return Err(ConsensusError::EmptyProfiles);
    }
    for p in profiles {
        p.validate_against(choices)?;
    }
    let m = choices.choices.len();
    let mut scores: BTreeMap<FactorId, f64> = choices.factors.keys().map(|f| (f.clone(), 0.0)).collect();
    for p in profiles {
        for c in &choices.choices {
            let weight = borda_weight(m, p.rank_of(&c.id).expect("validated")) as f64;
            for f in &c.factors {
                *scores.get_mut(f).expect("validated") += p.factor_importance[f] * weight;
            }
        }
    }
    let mut ordered: Vec<(&FactorId, f64)> = scores.iter().map(|(f, s)| (f, *s)).collect();
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let selected: Vec<FactorId> = match mode {
        SelectionMode::TopK => {
            let mut counts: Vec<usize> = choices.choices.iter().map(|c| c.factors.len()).collect();
            counts.sort_unstable();
            let k = counts[(counts.len() - 1) / 2].clamp(1, ordered.len());
            ordered.iter().take(k).map(|(f, _)| (*f).clone()).collect()
        }
        SelectionMode::AboveMean => {
            let mean = scores.values().sum::<f64>() / scores.len() as f64;
            ordered.iter().filter(|(_, s)| *s > mean).map(|(f, _)| (*f).clone()).collect()
        }
    };
    let label = selected
        .iter()
        .map(|f| choices.factors[f].as_str())
        .collect::<Vec<_>>()
        .join(" + ");
    Ok(SublatedProposal { factor_scores: scores, selected, label, mode })
}

/// All three proposals for one analysis round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusProposals {
    pub permissible: PermissibleProposal,
    pub compromise: CompromiseProposal,
    pub sublated: SublatedProposal,
}

pub fn analyze(
    profiles: &[PreferenceProfile],
    choices: &ChoiceSet,
    config: CompromiseConfig,
    mode: SelectionMode,
) -> Result<ConsensusProposals, ConsensusError> {
    Ok(ConsensusProposals {
        permissible: permissible_meeting(profiles)?,
        compromise: compromise_exploration(profiles, config)?,
        sublated: sublated_creation(profiles, choices, mode)?,
    })
}

/// Mean pairwise Kendall distance as a fraction of the largest possible
/// distance `m (m - 1) / 2`. Zero for fewer than two profiles or one choice.
pub fn dispersion(profiles: &[PreferenceProfile]) -> f64 {
    let Some(first) = profiles.first() else { return 0.0 };
    let m = first.order.len();
    if profiles.len() < 2 || m < 2 {
        return 0.0;
    }
    let mut total = 0usize;
    let mut pairs = 0usize;
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            if let Ok(d) = kendall_tau(&profiles[i].order, &profiles[j].order) {
                total += d;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return 0.0;
    }
    total as f64 / pairs as f64 / (m * (m - 1) / 2) as f64
}
