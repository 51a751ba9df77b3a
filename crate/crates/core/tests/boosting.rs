mod common;

use common::{c_ref, rng};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use stagewise::boosting::{best_stump, fit_weighted, fit_weighted_report, BoostConfig, StopReason};
use stagewise::surrogate::sigmoid_slope;
use stagewise::{AdditiveScorer, StageLayout, StagedDataset, Stump};

fn dataset(rows: &[Vec<f64>], labels: Vec<i8>, sizes: &[usize]) -> StagedDataset {
    let d = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let layout = StageLayout::contiguous(sizes, &vec![0.1; sizes.len() - 1]).unwrap();
    StagedDataset::new(Array2::from_shape_vec((rows.len(), d), flat).unwrap(), labels, layout).unwrap()
}

/// Every candidate stump in tie-break order, scored directly.
fn brute_force_stump(rows: &[Vec<f64>], dims: &[usize], targets: &[f64]) -> (Stump, f64) {
    let mut best: Option<(Stump, f64)> = None;
    for &d in dims {
        let mut values: Vec<f64> = rows.iter().map(|r| r[d]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut thresholds = vec![f64::NEG_INFINITY];
        thresholds.extend(values.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
        thresholds.push(f64::INFINITY);
        for &g in &thresholds {
            for s in [1i8, -1] {
                let stump = Stump::new(d, g, s);
                let edge: f64 = rows.iter().zip(targets).map(|(r, t)| t * stump.predict(r)).sum();
                if best.is_none_or(|(_, e)| edge > e) {
                    best = Some((stump, edge));
                }
            }
        }
    }
    best.unwrap()
}

#[test]
fn separable_pair_stump() {
    let data = dataset(&[vec![1.0], vec![2.0]], vec![-1, 1], &[1]);
    let (stump, edge) = best_stump(&data, &[0], &[-1.0, 1.0]).unwrap();
    assert_eq!(stump, Stump::new(0, 1.5, 1));
    assert_eq!(edge, 2.0);
}

#[test]
fn separable_line_is_fit_to_zero_error() {
    let xs = [-2.0, -1.0, 1.0, 2.0];
    let data = dataset(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>(), vec![-1, -1, 1, 1], &[1]);
    let w = vec![1.0; 4];
    let cfg = BoostConfig::default();
    let f = fit_weighted(&data, 0, &w, data.labels(), &AdditiveScorer::constant(0, 0.0), &cfg).unwrap();
    let loss: f64 = data.rows().enumerate().map(|(i, x)| c_ref(data.y(i) * f.score(x))).sum();
    assert!(loss < 0.05, "loss {loss}");
    assert!(data.rows().enumerate().all(|(i, x)| f.score(x) * data.y(i) > 0.0));
}

#[test]
fn large_lambda_stops_immediately() {
    let mut r = rng(5);
    let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![r.random_range(-1.0..1.0)]).collect();
    let labels: Vec<i8> = (0..40).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
    let data = dataset(&rows, labels, &[1]);
    let init = AdditiveScorer::constant(0, 0.3);
    let cfg = BoostConfig {
        lambda: 10.0,
        ..BoostConfig::default()
    };
    let report = fit_weighted_report(&data, 0, &vec![1.0; 40], data.labels(), &init, &cfg).unwrap();
    assert_eq!(report.scorer, init);
    assert_eq!(report.stop, StopReason::NoDescentDirection);
}

#[test]
fn slope_matches_finite_differences() {
    let mut r = rng(6);
    for _ in 0..20 {
        let z: f64 = r.random_range(-5.0..5.0);
        let h = 1e-5;
        let fd = -(c_ref(z + h) - c_ref(z - h)) / (2.0 * h);
        assert!(((sigmoid_slope(z) - fd) / fd).abs() < 1e-6);
    }
}

#[test]
fn non_finite_weights_are_rejected() {
    let data = dataset(&[vec![1.0], vec![2.0]], vec![-1, 1], &[1]);
    let init = AdditiveScorer::constant(0, 0.0);
    let err = fit_weighted(&data, 0, &[1.0, f64::NAN], data.labels(), &init, &BoostConfig::default());
    assert!(matches!(err, Err(stagewise::Error::Input(_))));
}

fn random_problem(seed: u64, n: usize, dims: usize) -> (Vec<Vec<f64>>, StagedDataset, Vec<f64>) {
    let mut r = rng(seed);
    // A coarse grid makes repeated values and ties common.
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dims).map(|_| f64::from(r.random_range(-3i32..=3)) * 0.5).collect())
        .collect();
    let labels: Vec<i8> = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
    let weights: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0)).collect();
    let data = dataset(&rows, labels, &vec![1; dims]);
    (rows, data, weights)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stump_search_matches_enumeration(seed in any::<u64>(), n in 1usize..9, dims in 1usize..4, integer in any::<bool>()) {
        let (rows, data, _) = random_problem(seed, n, dims);
        let mut r = rng(seed ^ 0xabc);
        let targets: Vec<f64> = (0..n)
            .map(|_| if integer { f64::from(r.random_range(-1i32..=1)) } else { r.random_range(-1.0..1.0) })
            .collect();
        let prefix: Vec<usize> = (0..dims).collect();
        let (got, edge) = best_stump(&data, &prefix, &targets).unwrap();
        let (want, want_edge) = brute_force_stump(&rows, &prefix, &targets);
        prop_assert!((edge - want_edge).abs() < 1e-12);
        if integer {
            // Integer targets give exact edges, so tie-breaking is comparable.
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn objective_never_increases(seed in any::<u64>(), lambda in 0.0f64..0.2) {
        let (_, data, weights) = random_problem(seed, 30, 2);
        let cfg = BoostConfig { lambda, iterations: 30, ..BoostConfig::default() };
        let report = fit_weighted_report(&data, 1, &weights, data.labels(), &AdditiveScorer::constant(1, 0.0), &cfg).unwrap();
        for w in report.objective.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        prop_assert_eq!(report.objective.len(), report.scorer.terms.len() + 1);
        prop_assert!(report.scorer.terms.iter().all(|t| t.weight > 0.0));
    }

    #[test]
    fn weight_scale_does_not_change_the_fit(seed in any::<u64>(), exponent in -10i32..10) {
        // Power-of-two factors scale every intermediate sum exactly, so the
        // fits must agree bit for bit.
        let factor = 2f64.powi(exponent);
        let (_, data, weights) = random_problem(seed, 25, 2);
        let scaled: Vec<f64> = weights.iter().map(|w| w * factor).collect();
        let cfg = BoostConfig { iterations: 15, ..BoostConfig::default() };
        let init = AdditiveScorer::constant(1, 0.0);
        let a = fit_weighted(&data, 1, &weights, data.labels(), &init, &cfg).unwrap();
        let b = fit_weighted(&data, 1, &scaled, data.labels(), &init, &cfg).unwrap();
        prop_assert_eq!(a.terms.len(), b.terms.len());
        for (s, t) in a.terms.iter().zip(&b.terms) {
            prop_assert_eq!(s.stump, t.stump);
            prop_assert_eq!(s.weight, t.weight);
        }
    }
}
