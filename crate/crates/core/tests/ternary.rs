mod common;

use coos_core::fixtures::{policy_scenarios, unused_stock_multi_agent};
use coos_core::policy::{
    compare_policies, evaluate_batch, evaluate_policy, normalize_ternary, PointStatus, ScaleMode, TernaryError, Triple,
    ValueDimension,
};
use proptest::prelude::*;

fn triples(v: &[(f64, f64, f64)]) -> Vec<(usize, Triple)> {
    v.iter().enumerate().map(|(i, &(s, e, c))| (i, Triple::new(s, e, c))).collect()
}

#[test]
fn worked_example() {
    let pts = normalize_ternary(&triples(&[(2.0, 3.0, 5.0), (4.0, 1.0, 5.0), (6.0, 2.0, 2.0)]), ScaleMode::Range).unwrap();
    let s = pts[0].1.simplex.unwrap();
    assert!((s.soc - 0.136364).abs() < 1e-6);
    assert!((s.env - 0.409091).abs() < 1e-6);
    assert!((s.eco - 0.454545).abs() < 1e-6);
}

#[test]
fn degenerate_dimension_is_a_batch_error() {
    let err = normalize_ternary(&triples(&[(1.0, 2.0, 3.0), (2.0, 2.0, 4.0)]), ScaleMode::Range).unwrap_err();
    assert_eq!(err, TernaryError::DegenerateRange { dimensions: vec![ValueDimension::Env] });
}

#[test]
fn statuses_for_zero_and_negative_sums() {
    let pts = normalize_ternary(&triples(&[(1.0, -1.0, 0.0), (-1.0, -1.0, -1.0), (0.0, 1.0, 1.0)]), ScaleMode::Range)
        .unwrap();
    assert_eq!(pts[0].1.status, PointStatus::ZeroSum);
    assert!(pts[0].1.simplex.is_none());
    assert_eq!(pts[1].1.status, PointStatus::NegativeSum);
    assert!((pts[1].1.simplex.unwrap().sum() - 1.0).abs() < 1e-12);
    assert_eq!(pts[2].1.status, PointStatus::Plottable);
}

/// Sum in exact tenths; every entry must be a one-decimal literal.
fn tenths(values: impl Iterator<Item = f64>) -> i64 {
    values
        .map(|v| {
            let t = (v * 10.0).round();
            assert_eq!(t / 10.0, v, "{v} is not a one-decimal value");
            t as i64
        })
        .sum()
}

#[test]
fn shipped_policies_load_and_sum_to_one() {
    let scenarios = policy_scenarios();
    assert_eq!(scenarios.len(), 4);
    for s in &scenarios {
        s.validate().unwrap();
        assert_eq!(tenths(s.inputs.values().copied()), 10, "{}", s.id);
    }
    let a = &scenarios[0];
    let expected = [
        ("central_finance", 0.0),
        ("external_capital", 0.0),
        ("inbound_revenue", 0.0),
        ("municipal_subsidy", 0.2),
        ("regional_finance", 0.7),
        ("resident_fund", 0.1),
    ];
    assert_eq!(a.inputs.iter().map(|(k, v)| (k.as_str(), *v)).collect::<Vec<_>>(), expected);
}

#[test]
fn shipped_comparison_has_four_plottable_rows() {
    let model = unused_stock_multi_agent();
    let table = compare_policies(&model, &policy_scenarios(), None, ScaleMode::Range).unwrap();
    assert_eq!(table.rows.len(), 4);
    for row in &table.rows {
        assert_eq!(tenths(row.inputs.iter().copied()), 10);
        assert_eq!(row.status, Some(PointStatus::Plottable));
        assert!((row.simplex.unwrap().sum() - 1.0).abs() < 1e-9);
    }
    assert!(table.ternary_error.is_none());
}

#[test]
fn parallel_batch_equals_sequential() {
    let model = unused_stock_multi_agent();
    let scenarios = policy_scenarios();
    let batch = evaluate_batch(&model, &scenarios).unwrap();
    for (s, b) in scenarios.iter().zip(batch) {
        assert_eq!(evaluate_policy(&model, s).unwrap(), b);
    }
}

fn triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn plottable_points_sum_to_one(v in prop::collection::vec(triple(), 2..8)) {
        if let Ok(pts) = normalize_ternary(&triples(&v), ScaleMode::Range) {
            for (_, p) in pts {
                if let Some(s) = p.simplex {
                    prop_assert!((s.sum() - 1.0).abs() <= 1e-9 * (1.0 + s.soc.abs() + s.env.abs() + s.eco.abs()));
                }
            }
        }
    }

    #[test]
    fn per_dimension_scale_invariance(
        v in prop::collection::vec(triple(), 2..8),
        k in (0.01f64..100.0, 0.01f64..100.0, 0.01f64..100.0),
    ) {
        let scaled: Vec<(f64, f64, f64)> = v.iter().map(|&(s, e, c)| (s * k.0, e * k.1, c * k.2)).collect();
        match (normalize_ternary(&triples(&v), ScaleMode::Range), normalize_ternary(&triples(&scaled), ScaleMode::Range)) {
            (Ok(a), Ok(b)) => {
                for ((_, p), (_, q)) in a.iter().zip(&b) {
                    for d in ValueDimension::ALL {
                        prop_assert!(common::close(p.scaled[d], q.scaled[d], 1e-9));
                    }
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "degeneracy changed under scaling: {:?} / {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn minmax_coordinates_lie_in_the_triangle(v in prop::collection::vec(triple(), 2..8)) {
        if let Ok(pts) = normalize_ternary(&triples(&v), ScaleMode::Minmax) {
            for (_, p) in pts {
                for d in ValueDimension::ALL {
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p.scaled[d]));
                }
                if let Some(s) = p.simplex {
                    prop_assert!(ValueDimension::ALL.iter().all(|&d| s[d] >= -1e-12));
                }
            }
        }
    }
}
