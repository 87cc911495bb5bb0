#![allow(dead_code)]

use std::collections::BTreeMap;

use coos_core::consensus::PreferenceProfile;
use coos_core::graph::{NodeKind, WeightedGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const TARGET: &str = "n_target";

/// Random layered DAG with `n` nodes: inputs first, a single Impact node
/// last, intermediate kinds in between. Edges only go forward in index
/// order. With `dyadic` every weight is a multiple of 1/8 in [-2, 2].
pub fn random_dag(rng: &mut impl Rng, n: usize, dyadic: bool) -> (WeightedGraph, Vec<String>) {
    assert!(n >= 3);
    let n_inputs = rng.random_range(1..=(n - 2).clamp(1, 4));
    let names: Vec<String> =
        (0..n).map(|i| if i == n - 1 { TARGET.to_string() } else { format!("n{i:02}") }).collect();
    let mids = [NodeKind::Activity, NodeKind::Output, NodeKind::OutcomeShort, NodeKind::OutcomeMid, NodeKind::OutcomeLong];
    let mut g = WeightedGraph::new();
    for (i, id) in names.iter().enumerate() {
        let kind = if i < n_inputs {
            NodeKind::Input
        } else if i == n - 1 {
            NodeKind::Impact
        } else {
            mids[rng.random_range(0..mids.len())]
        };
        g.add_node(id.clone(), id.clone(), kind);
    }
    let p = rng.random_range(0.25..0.7);
    for i in 0..n - 1 {
        for j in (i + 1).max(n_inputs)..n {
            if rng.random_bool(p) {
                let w = if dyadic {
                    rng.random_range(-16..=16) as f64 / 8.0
                } else {
                    rng.random_range(-2.0..2.0)
                };
                g.add_edge(names[i].clone(), names[j].clone(), w);
            }
        }
    }
    (g, names[..n_inputs].to_vec())
}

/// Sum over every directed path from `from` to `to` of the product of edge
/// weights, by depth-first enumeration.
pub fn path_sum(g: &WeightedGraph, from: &str, to: &str) -> f64 {
    if from == to {
        return 1.0;
    }
    g.edges.iter().filter(|e| e.from == from).map(|e| e.weight * path_sum(g, &e.to, to)).sum()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// `m` random profiles over `n` choices named c0..c{n-1}.
pub fn random_profiles(rng: &mut impl Rng, m: usize, n: usize) -> Vec<PreferenceProfile> {
    let choices: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    (0..m)
        .map(|i| {
            let mut order = choices.clone();
            order.shuffle(rng);
            PreferenceProfile {
                participant: format!("p{i}"),
                order,
                permissible_k: rng.random_range(1..=n),
                factor_importance: BTreeMap::new(),
            }
        })
        .collect()
}

pub fn random_ranking(rng: &mut impl Rng, n: usize) -> Vec<String> {
    let mut r: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    r.shuffle(rng);
    r
}
