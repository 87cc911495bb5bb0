mod common;

use common::{close, path_sum, random_dag, rng, TARGET};
use coos_core::graph::{GraphProfile, InputAssignment, NodeKind, WeightedGraph};
use coos_core::impact::{rank_inputs, LogicModel};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn analytic_matches_central_differences() {
    let mut r = rng(11);
    for _ in 0..200 {
        let n = r.random_range(3..=20);
        let (g, inputs) = random_dag(&mut r, n, false);
        let c = g.compile(GraphProfile::General).unwrap();
        let mut base = InputAssignment::zeros();
        for i in &inputs {
            base.set(i.clone(), r.random_range(-1.0..1.0));
        }
        let reverse = c.input_sensitivities(TARGET).unwrap();
        for i in &inputs {
            let a = c.sensitivity(i, TARGET).unwrap();
            let fd = c.finite_diff_sensitivity(i, TARGET, 1e-3, &base).unwrap();
            assert!(close(a, fd, 1e-9), "{i}: {a} vs {fd}");
            assert!(close(a, reverse[i], 1e-12));
        }
    }
}

#[test]
fn small_dyadic_graphs_match_path_enumeration_exactly() {
    let mut r = rng(12);
    for _ in 0..200 {
        let n = r.random_range(3..=8);
        let (g, inputs) = random_dag(&mut r, n, true);
        let c = g.compile(GraphProfile::General).unwrap();
        for i in &inputs {
            assert_eq!(c.sensitivity(i, TARGET).unwrap(), path_sum(&g, i, TARGET));
        }
    }
}

#[test]
fn unreached_target_has_zero_sensitivity() {
    let g = WeightedGraph::new()
        .node("x", "x", NodeKind::Input)
        .node("y", "y", NodeKind::Input)
        .node("z", "z", NodeKind::Impact)
        .edge("x", "z", 2.0);
    assert_eq!(g.sensitivity("y", "z").unwrap(), 0.0);
}

fn relabeled(g: &WeightedGraph, prefix: &str) -> WeightedGraph {
    let mut out = WeightedGraph::new();
    for (id, n) in &g.nodes {
        out.add_node(format!("{prefix}{id}"), n.label.clone(), n.kind);
    }
    for e in g.edges.iter().rev() {
        out.add_edge(format!("{prefix}{}", e.from), format!("{prefix}{}", e.to), e.weight);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ranking_ignores_labels_and_edge_order(seed in any::<u64>(), n in 3usize..14) {
        let mut r = rng(seed);
        let (g, _) = random_dag(&mut r, n, false);
        let a = rank_inputs(&LogicModel::new(g.clone(), TARGET)).unwrap();
        let b = rank_inputs(&LogicModel::new(relabeled(&g, "q_"), format!("q_{TARGET}"))).unwrap();
        let ka: Vec<(String, f64)> = a.iter().map(|s| (s.input_id.clone(), s.sensitivity)).collect();
        let kb: Vec<(String, f64)> = b.iter().map(|s| (s.input_id.trim_start_matches("q_").to_string(), s.sensitivity)).collect();
        prop_assert_eq!(ka.len(), kb.len());
        for ((ia, sa), (ib, sb)) in ka.iter().zip(&kb) {
            prop_assert!(close(*sa, *sb, 1e-12));
            if (sa - sb).abs() == 0.0 {
                prop_assert_eq!(ia, ib);
            }
        }
    }

    #[test]
    fn evaluation_is_linear_in_inputs(seed in any::<u64>(), n in 3usize..14, k in -3.0f64..3.0) {
        let mut r = rng(seed);
        let (g, inputs) = random_dag(&mut r, n, false);
        let c = g.compile(GraphProfile::General).unwrap();
        let mut x = InputAssignment::zeros();
        let mut kx = InputAssignment::zeros();
        for i in &inputs {
            let v = r.random_range(-1.0..1.0);
            x.set(i.clone(), v);
            kx.set(i.clone(), k * v);
        }
        let y = c.evaluate_node(&x, TARGET).unwrap();
        let ky = c.evaluate_node(&kx, TARGET).unwrap();
        prop_assert!(close(k * y, ky, 1e-9));
    }
}
