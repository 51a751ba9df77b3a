mod common;

use common::{random_data, random_model, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use stagewise::baselines::train_per_stage;
use stagewise::boosting::BoostConfig;
use stagewise::data::generate_mixture;
use stagewise::evaluation::{
    evaluate, sweep, CurvePoint, Grid, Method, MyopicPolicy, SweepConfig,
};
use stagewise::model::sign;
use stagewise::oracle::GaussianMixtureSpec;
use stagewise::trainer::{initialize, train, TrainConfig};

fn small_cfg(trials: usize) -> SweepConfig {
    let boost = BoostConfig {
        iterations: 10,
        ..BoostConfig::default()
    };
    SweepConfig {
        trials,
        seed: 5,
        boost,
        baseline_boost: BoostConfig {
            iterations: 10,
            ..SweepConfig::default().baseline_boost
        },
        outer_loops: 2,
        ..SweepConfig::default()
    }
}

fn mixture(n: usize, seed: u64) -> stagewise::StagedDataset {
    generate_mixture(&GaussianMixtureSpec::standard(), n, seed, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evaluation_ignores_row_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 60, &[1, 1, 1], &[0.1, 0.3]);
        let model = random_model(&mut r, data.layout(), 4, 1.5);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut r);
        let shuffled = data.subset(&order).unwrap();
        prop_assert_eq!(evaluate(&model, &data).unwrap(), evaluate(&model, &shuffled).unwrap());
    }

    #[test]
    fn error_plus_cost_is_the_hard_risk(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 50, &[2, 1, 1], &[0.2, 0.05]);
        let model = random_model(&mut r, data.layout(), 3, 1.0);
        let p = evaluate(&model, &data).unwrap();
        let risk = model.empirical_hard_risk(&data).unwrap();
        prop_assert!((p.error + p.avg_cost - risk).abs() < 1e-12);
        prop_assert!(p.reject_rates.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn reject_everything_pays_every_cost() {
    let mut r = rng(3);
    let data = random_data(&mut r, 40, &[1, 1], &[0.25]);
    let model = initialize(data.layout());
    let p = evaluate(&model, &data).unwrap();
    assert_eq!(p.reject_rates, vec![1.0]);
    assert!((p.avg_cost - 0.25).abs() < 1e-15);
    let terminal_errors = data
        .rows()
        .zip(data.labels())
        .filter(|(x, &y)| sign(model.terminal().score(x)) != f64::from(y))
        .count();
    assert_eq!(p.error, terminal_errors as f64 / 40.0);
}

#[test]
fn two_trial_sweep_matches_its_trials() {
    let data = mixture(200, 1);
    let grid = Grid::Values(vec![vec![0.05], vec![0.3]]);
    let cfg = small_cfg(2);
    let both = sweep(&data, Method::Global, &grid, &cfg).unwrap();
    let first = sweep(&data, Method::Global, &grid, &small_cfg(1)).unwrap();
    assert_eq!(first.per_trial[0], both.per_trial[0]);

    // Trial 1 rebuilt by hand from its split.
    let (train_set, test_set) = cfg.split(&data, 1).unwrap();
    for (g, deltas) in [[0.05], [0.3]].iter().enumerate() {
        let out = train(
            &train_set,
            &TrainConfig {
                boost: cfg.boost,
                outer_loops: cfg.outer_loops,
                deltas: deltas.to_vec(),
                penalty: cfg.penalty,
            },
        )
        .unwrap();
        let mut p = evaluate(&out.model, &test_set).unwrap();
        p.params = deltas.to_vec();
        assert_eq!(both.per_trial[1][g], p);
    }

    for (g, point) in both.points.iter().enumerate() {
        let column: Vec<&CurvePoint> = both.per_trial.iter().map(|t| &t[g]).collect();
        let mean = (column[0].error + column[1].error) / 2.0;
        assert!((point.error.mean - mean).abs() < 1e-15);
        let rate = (column[0].reject_rates[0] + column[1].reject_rates[0]) / 2.0;
        assert!((point.reject_rates[0].mean - rate).abs() < 1e-15);
        assert_eq!(point.trials, 2);
    }
}

#[test]
fn sweeps_are_reproducible() {
    let data = mixture(200, 2);
    let grid = Grid::Quantiles(vec![0.0, 0.5, 1.0]);
    let a = sweep(&data, Method::Myopic, &grid, &small_cfg(2)).unwrap();
    let b = sweep(&data, Method::Myopic, &grid, &SweepConfig { jobs: Some(2), ..small_cfg(2) }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn myopic_extremes_and_monotonicity() {
    let data = mixture(300, 4);
    let cfg = small_cfg(1);
    let (train_set, test_set) = cfg.split(&data, 0).unwrap();
    let classifiers = train_per_stage(&train_set, &cfg.baseline_boost).unwrap();

    let stage_error = |k: usize| {
        test_set
            .rows()
            .zip(test_set.labels())
            .filter(|(x, &y)| sign(classifiers.scorers[k].score(x)) != f64::from(y))
            .count() as f64
            / test_set.len() as f64
    };
    let at = |t: f64| {
        evaluate(
            &MyopicPolicy {
                classifiers: &classifiers,
                thresholds: vec![t],
            },
            &test_set,
        )
        .unwrap()
    };
    let none = at(0.0);
    assert_eq!(none.reject_rates, vec![0.0]);
    assert_eq!(none.error, stage_error(0));
    let all = at(f64::INFINITY);
    assert_eq!(all.reject_rates, vec![1.0]);
    assert_eq!(all.error, stage_error(1));

    let mut last = 0.0;
    for t in [0.0, 0.1, 0.3, 0.6, 1.0, 2.0, 4.0] {
        let r = at(t).reject_rates[0];
        assert!(r >= last);
        last = r;
    }
}

#[test]
fn quantile_levels_order_the_reject_rates() {
    let data = mixture(300, 6);
    let result = sweep(&data, Method::Myopic, &Grid::Quantiles(vec![0.0, 0.25, 0.5, 0.75, 1.0]), &small_cfg(2)).unwrap();
    let rates: Vec<f64> = result.points.iter().map(|p| p.reject_rates[0].mean).collect();
    assert_eq!(rates[0], 0.0);
    assert_eq!(rates[4], 1.0);
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
}

#[test]
fn utility_sweep_on_quantized_data() {
    let data = generate_mixture(&GaussianMixtureSpec::standard(), 300, 8, Some(20)).unwrap();
    let result = sweep(&data, Method::Utility, &Grid::Quantiles(vec![0.0, 0.5, 1.0]), &small_cfg(1)).unwrap();
    let rates: Vec<f64> = result.points.iter().map(|p| p.reject_rates[0].mean).collect();
    assert_eq!(rates[0], 0.0);
    assert_eq!(rates[2], 1.0);
    assert!(result.per_trial[0].iter().all(|p| p.params[0] >= 0.0));

    let continuous = mixture(300, 8);
    assert!(sweep(&continuous, Method::Utility, &Grid::Quantiles(vec![0.5]), &small_cfg(1)).is_err());
}

#[test]
fn malformed_sweeps_are_rejected() {
    let data = mixture(100, 9);
    let cfg = small_cfg(1);
    assert!(sweep(&data, Method::Global, &Grid::Values(vec![]), &cfg).is_err());
    assert!(sweep(&data, Method::Global, &Grid::Values(vec![vec![0.1, 0.2]]), &cfg).is_err());
    assert!(sweep(&data, Method::Global, &Grid::Quantiles(vec![0.5]), &cfg).is_err());
    assert!(sweep(&data, Method::Myopic, &Grid::Values(vec![vec![-1.0]]), &cfg).is_err());
    assert!(sweep(&data, Method::Global, &Grid::Values(vec![vec![0.1]]), &SweepConfig { trials: 0, ..cfg }).is_err());
}
