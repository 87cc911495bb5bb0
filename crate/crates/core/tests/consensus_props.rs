mod common;

use common::{random_profiles, random_ranking, rng};
use coos_core::consensus::oracle::{compromise_ranking, kendall_pairs, permissible_choice, permissible_costs};
use coos_core::consensus::{
    analyze, compromise_exploration, dispersion, kendall_tau, permissible_meeting, sublated_creation, CompromiseConfig,
    PreferenceProfile, SelectionMode,
};
use coos_core::fixtures::{unused_stock_choices, unused_stock_profiles};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn permissible_meeting_matches_oracle() {
    let mut r = rng(21);
    for _ in 0..200 {
        let (m, n) = (r.random_range(1..=5), r.random_range(1..=6));
        let profiles = random_profiles(&mut r, m, n);
        let got = permissible_meeting(&profiles).unwrap();
        let (choice, cost) = permissible_choice(&profiles).unwrap();
        assert_eq!((got.choice.as_str(), got.widening_cost), (choice.as_str(), cost));
        assert_eq!(got.costs, permissible_costs(&profiles).unwrap());
    }
}

#[test]
fn compromise_exploration_matches_oracle() {
    let mut r = rng(22);
    for _ in 0..200 {
        let (m, n) = (r.random_range(1..=5), r.random_range(1..=6));
        let profiles = random_profiles(&mut r, m, n);
        let got = compromise_exploration(&profiles, CompromiseConfig::default()).unwrap();
        let (ranking, total, max) = compromise_ranking(&profiles).unwrap();
        assert_eq!((&got.ranking, got.total_distance, got.max_distance), (&ranking, total, max));
        assert_eq!(got.top, ranking[0]);
        assert!(!got.approximate);
        for d in &got.distances {
            let p = profiles.iter().find(|p| p.participant == d.participant).unwrap();
            assert_eq!(d.distance, kendall_pairs(&ranking, &p.order));
        }
    }
}

#[test]
fn kendall_axioms_on_random_triples() {
    let mut r = rng(23);
    for _ in 0..1000 {
        let n = r.random_range(1..=8);
        let (a, b, c) = (random_ranking(&mut r, n), random_ranking(&mut r, n), random_ranking(&mut r, n));
        let d = |x: &[String], y: &[String]| kendall_tau(x, y).unwrap();
        assert_eq!(d(&a, &a), 0);
        assert_eq!(d(&a, &b) == 0, a == b);
        assert_eq!(d(&a, &b), d(&b, &a));
        assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        assert!(d(&a, &b) <= n * (n.saturating_sub(1)) / 2);
        assert_eq!(d(&a, &b), kendall_pairs(&a, &b));
    }
}

#[test]
fn unanimous_profiles_agree_everywhere() {
    let mut r = rng(24);
    for _ in 0..50 {
        let n = r.random_range(1..=6);
        let order = random_ranking(&mut r, n);
        let profiles: Vec<PreferenceProfile> = (0..r.random_range(1..=5))
            .map(|i| PreferenceProfile { participant: format!("p{i}"), order: order.clone(), permissible_k: 1, factor_importance: Default::default() })
            .collect();
        let c = compromise_exploration(&profiles, CompromiseConfig::default()).unwrap();
        assert_eq!(c.ranking, order);
        assert_eq!(c.total_distance, 0);
        let p = permissible_meeting(&profiles).unwrap();
        assert_eq!((p.choice.as_str(), p.widening_cost), (order[0].as_str(), 0));
        assert_eq!(dispersion(&profiles), 0.0);
    }
}

#[test]
fn raising_a_choice_never_raises_its_widening_cost() {
    let mut r = rng(25);
    for _ in 0..200 {
        let (m, n) = (r.random_range(1..=5), r.random_range(2..=6));
        let mut profiles = random_profiles(&mut r, m, n);
        let target = format!("c{}", r.random_range(0..n));
        let before = permissible_costs(&profiles).unwrap()[&target];
        let who = r.random_range(0..m);
        let pos = profiles[who].order.iter().position(|c| *c == target).unwrap();
        if pos > 0 {
            profiles[who].order.swap(pos - 1, pos);
        }
        let after = permissible_meeting(&profiles).unwrap().costs[&target];
        assert!(after <= before);
    }
}

#[test]
fn above_limit_search_is_flagged_and_consistent() {
    let mut r = rng(26);
    let profiles = random_profiles(&mut r, 4, 9);
    let got = compromise_exploration(&profiles, CompromiseConfig::default()).unwrap();
    assert!(got.approximate);
    let recomputed: usize = profiles.iter().map(|p| kendall_pairs(&got.ranking, &p.order)).sum();
    assert_eq!(got.total_distance, recomputed);
    let small = CompromiseConfig { exhaustive_limit: 3 };
    let profiles = random_profiles(&mut r, 3, 5);
    let approx = compromise_exploration(&profiles, small).unwrap();
    let (_, best, _) = compromise_ranking(&profiles).unwrap();
    assert!(approx.approximate && approx.total_distance >= best);
}

#[test]
fn shipped_session_proposals() {
    let profiles = unused_stock_profiles();
    let choices = unused_stock_choices();
    let all = analyze(&profiles, &choices, CompromiseConfig::default(), SelectionMode::TopK).unwrap();
    assert_eq!(all.permissible.choice, permissible_choice(&profiles).unwrap().0);
    assert_eq!(all.compromise.ranking, compromise_ranking(&profiles).unwrap().0);
    assert_eq!(all.compromise.top, "AxB");
    let sub = sublated_creation(&profiles, &choices, SelectionMode::TopK).unwrap();
    assert_eq!(sub, all.sublated);
    assert!(!sub.selected.is_empty() && sub.selected.iter().all(|f| choices.factors.contains_key(f)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compromise_is_independent_of_profile_order(seed in any::<u64>(), m in 1usize..=5, n in 1usize..=6) {
        let mut r = rng(seed);
        let mut profiles = random_profiles(&mut r, m, n);
        let a = compromise_exploration(&profiles, CompromiseConfig::default()).unwrap();
        profiles.reverse();
        let b = compromise_exploration(&profiles, CompromiseConfig::default()).unwrap();
        prop_assert_eq!(a.ranking, b.ranking);
        prop_assert_eq!(permissible_meeting(&profiles).unwrap().choice, permissible_choice(&profiles).unwrap().0);
    }

    #[test]
    fn dispersion_is_a_fraction(seed in any::<u64>(), m in 2usize..=6, n in 2usize..=6) {
        let mut r = rng(seed);
        let d = dispersion(&random_profiles(&mut r, m, n));
        prop_assert!((0.0..=1.0).contains(&d));
    }
}
