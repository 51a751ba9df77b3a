mod common;

use common::{random_data, random_model, rng};
use proptest::prelude::*;
use rand::Rng;
use stagewise::MultiStageModel;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scorers_ignore_coordinates_acquired_later(seed in any::<u64>(), stages in 2usize..5) {
        let mut r = rng(seed);
        let sizes: Vec<usize> = (0..stages).map(|_| r.random_range(1..3)).collect();
        let data = random_data(&mut r, 5, &sizes, &vec![0.1; stages - 1]);
        let model = random_model(&mut r, data.layout(), 6, 1.0);
        let layout = data.layout();
        for x in data.rows() {
            for (k, pair) in model.reject_stages().iter().enumerate() {
                let mut y = x.to_vec();
                for (j, v) in y.iter_mut().enumerate() {
                    if !layout.is_visible(k, j) {
                        *v = r.random_range(-5.0..5.0);
                    }
                }
                prop_assert_eq!(pair.positive.score(x), pair.positive.score(&y));
                prop_assert_eq!(pair.negative.score(x), pair.negative.score(&y));
            }
        }
    }

    #[test]
    fn cost_paid_and_hard_risk_agree(seed in any::<u64>(), stages in 1usize..5) {
        let mut r = rng(seed);
        let deltas: Vec<f64> = (1..stages).map(|_| r.random_range(0.0..0.5)).collect();
        let data = random_data(&mut r, 40, &vec![1; stages], &deltas);
        let model = random_model(&mut r, data.layout(), 3, 1.0);
        let mut total = 0.0;
        for (i, x) in data.rows().enumerate() {
            let p = model.predict(x).unwrap();
            let paid: f64 = deltas[..p.stop_stage].iter().sum();
            prop_assert!((p.cost - paid).abs() < 1e-15);
            prop_assert_eq!(p, model.predict(x).unwrap());
            total += p.cost + if p.label != data.y(i) { 1.0 } else { 0.0 };
        }
        let risk = model.empirical_hard_risk(&data).unwrap();
        prop_assert!((risk - total / data.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact(seed in any::<u64>(), stages in 1usize..4) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 2, &vec![2; stages], &vec![0.123456789; stages - 1]);
        let model = random_model(&mut r, data.layout(), 5, 1e3);
        let json = model.to_json().unwrap();
        let back = MultiStageModel::from_json(&json).unwrap();
        prop_assert_eq!(back, model, "{}", json);
    }
}
