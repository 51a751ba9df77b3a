#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagewise::model::{Stump, WeightedStump};
use stagewise::{AdditiveScorer, MultiStageModel, RejectPair, StageLayout, StagedDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` rows of uniform features in `[-2, 2]` with random labels, one
/// coordinate per stage unless `sizes` says otherwise.
pub fn random_data(r: &mut impl Rng, n: usize, sizes: &[usize], deltas: &[f64]) -> StagedDataset {
    let layout = StageLayout::contiguous(sizes, deltas).unwrap();
    let d = layout.dim();
    let features = Array2::from_shape_fn((n, d), |_| r.random_range(-2.0..2.0));
    let labels = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
    StagedDataset::new(features, labels, layout).unwrap()
}

pub fn random_scorer(r: &mut impl Rng, layout: &StageLayout, stage: usize, terms: usize, scale: f64) -> AdditiveScorer {
    let prefix = layout.prefix(stage).to_vec();
    AdditiveScorer {
        stage,
        bias: r.random_range(-scale..scale),
        terms: (0..terms)
            .map(|_| WeightedStump {
                stump: Stump::new(
                    prefix[r.random_range(0..prefix.len())],
                    r.random_range(-2.0..2.0),
                    if r.random_bool(0.5) { 1 } else { -1 },
                ),
                weight: r.random_range(-scale..scale),
            })
            .collect(),
    }
}

pub fn random_model(r: &mut impl Rng, layout: &StageLayout, terms: usize, scale: f64) -> MultiStageModel {
    let k = layout.num_stages();
    let pairs = (0..k - 1)
        .map(|s| RejectPair {
            positive: random_scorer(r, layout, s, terms, scale),
            negative: random_scorer(r, layout, s, terms, scale),
        })
        .collect();
    MultiStageModel::new(layout.clone(), pairs, random_scorer(r, layout, k - 1, terms, scale)).unwrap()
}

/// `1 / (1 + e^z)` written directly, as an independent reference.
pub fn c_ref(z: f64) -> f64 {
    1.0 / (1.0 + z.exp())
}
