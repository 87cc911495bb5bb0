//! Exhaustive reference implementations. They share no code with
//! [`super::analysis`] beyond the profile types and are deliberately slow.

use std::collections::BTreeMap;

use super::{ChoiceId, ConsensusError, PreferenceProfile};

/// Discordant-pair count by checking every unordered pair of items.
pub fn kendall_pairs(a: &[ChoiceId], b: &[ChoiceId]) -> usize {
    let before = |r: &[ChoiceId], x: &ChoiceId, y: &ChoiceId| {
        r.iter().position(|c| c == x) < r.iter().position(|c| c == y)
    };
    let mut n = 0;
    for (i, x) in a.iter().enumerate() {
        for y in &a[i + 1..] {
            if before(a, x, y) != before(b, x, y) {
                n += 1;
            }
        }
    }
    n
}

fn sorted_domain(profiles: &[PreferenceProfile]) -> Result<Vec<ChoiceId>, ConsensusError> {
    let first = profiles.first().ok_or(ConsensusError::EmptyProfiles)?;
    let mut domain = first.order.clone();
    domain.sort();
    for p in profiles {
        let mut d = p.order.clone();
        d.sort();
        if d != domain {
            return Err(ConsensusError::MismatchedDomains(p.participant.clone()));
        }
    }
    Ok(domain)
}

/// Widening cost per choice by growing each participant's permissible prefix
/// one rank at a time until it contains the choice.
pub fn permissible_costs(profiles: &[PreferenceProfile]) -> Result<BTreeMap<ChoiceId, usize>, ConsensusError> {
    let domain = sorted_domain(profiles)?;
    let mut costs = BTreeMap::new();
    for c in domain {
        let mut total = 0;
        for p in profiles {
            let mut k = p.permissible_k;
            while !p.order[..k].contains(&c) {
                k += 1;
                total += 1;
            }
        }
        costs.insert(c, total);
    }
    Ok(costs)
}

/// Choice picked by sorting all choices on (cost, rank sum, id).
pub fn permissible_choice(profiles: &[PreferenceProfile]) -> Result<(ChoiceId, usize), ConsensusError> {
    let costs = permissible_costs(profiles)?;
    let mut keyed: Vec<(usize, usize, ChoiceId)> = costs
        .into_iter()
        .map(|(c, cost)| {
            let rank_sum = profiles.iter().map(|p| p.order.iter().position(|x| *x == c).unwrap() + 1).sum();
            (cost, rank_sum, c)
        })
        .collect();
    keyed.sort();
    let (cost, _, c) = keyed.swap_remove(0);
    Ok((c, cost))
}

/// Every permutation of `items`, by Heap's algorithm.
pub fn permutations(items: &[ChoiceId]) -> Vec<Vec<ChoiceId>> {
    let mut a = items.to_vec();
    let n = a.len();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Full enumeration of rankings sorted by (total distance, max distance,
/// ranking); returns the first with its total and max.
pub fn compromise_ranking(profiles: &[PreferenceProfile]) -> Result<(Vec<ChoiceId>, usize, usize), ConsensusError> {
    let domain = sorted_domain(profiles)?;
    let mut all: Vec<(usize, usize, Vec<ChoiceId>)> = permutations(&domain)
        .into_iter()
        .map(|r| {
            let d: Vec<usize> = profiles.iter().map(|p| kendall_pairs(&r, &p.order)).collect();
            (d.iter().sum(), d.iter().copied().max().unwrap_or(0), r)
        })
        .collect();
    all.sort();
    let (total, max, ranking) = all.swap_remove(0);
    Ok((ranking, total, max))
}
