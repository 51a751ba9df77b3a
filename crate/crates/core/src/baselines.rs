//! Comparison strategies built from independently trained per-stage
//! classifiers.
//!
//! The myopic policy rejects when the current stage's margin is small. The
//! utility policy rejects when the expected change of normalized margin from
//! acquiring the next stage is large, which needs a discrete next-stage
//! measurement and an estimate of its conditional distribution.

use std::collections::BTreeMap;

use crate::boosting::{fit_weighted, BoostConfig};
use crate::error::{Error, Result};
use crate::model::{sign, AdditiveScorer, Prediction, StageLayout, StagedDataset};

/// One boosted classifier per stage, each trained on all training rows with
/// the coordinates visible at its stage.
#[derive(Clone, Debug, PartialEq)]
pub struct PerStageClassifiers {
    pub layout: StageLayout,
    pub scorers: Vec<AdditiveScorer>,
}

pub fn train_per_stage(data: &StagedDataset, cfg: &BoostConfig) -> Result<PerStageClassifiers> {
    let weights = vec![1.0; data.len()];
    let scorers = (0..data.layout().num_stages())
        .map(|k| {
            fit_weighted(
                data,
                k,
                &weights,
                data.labels(),
                &AdditiveScorer::constant(k, 0.0),
                cfg,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerStageClassifiers {
        layout: data.layout().clone(),
        scorers,
    })
}

impl PerStageClassifiers {
    pub fn num_stages(&self) -> usize {
        self.scorers.len()
    }

    /// Score of the stage-`k` classifier divided by its ℓ1 weight, so margins
    /// of different stages are on a common scale.
    pub fn normalized_score(&self, k: usize, x: &[f64]) -> f64 {
        let s = &self.scorers[k];
        let total = s.total_weight();
        if total > 0.0 {
            s.score(x) / total
        } else {
            s.score(x)
        }
    }

    /// Walks the stages, stopping at the first one `stop` accepts.
    fn route(&self, x: &[f64], mut stop: impl FnMut(usize) -> bool) -> Prediction {
        let last = self.num_stages() - 1;
        let mut cost = 0.0;
        for k in 0..last {
            if stop(k) {
                return Prediction {
                    label: sign(self.scorers[k].score(x)),
                    stop_stage: k,
                    cost,
                };
            }
            cost += self.layout.cost(k + 1);
        }
        Prediction {
            label: sign(self.scorers[last].score(x)),
            stop_stage: last,
            cost,
        }
    }
}

fn check_thresholds(thresholds: &[f64], stages: usize) -> Result<()> {
    if thresholds.len() + 1 != stages {
        return Err(Error::input(format!(
            "{stages} stages need {} thresholds, got {}",
            stages - 1,
            thresholds.len()
        )));
    }
    if thresholds.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(Error::input("thresholds must be >= 0"));
    }
    Ok(())
}

/// Classifies at stage `k` when `|f_k(x)| > thresholds[k]`, rejects otherwise.
pub fn myopic_predict(pc: &PerStageClassifiers, thresholds: &[f64], x: &[f64]) -> Result<Prediction> {
    check_thresholds(thresholds, pc.num_stages())?;
    check_width(&pc.layout, x)?;
    Ok(pc.route(x, |k| pc.scorers[k].score(x).abs() > thresholds[k]))
}

fn check_width(layout: &StageLayout, x: &[f64]) -> Result<()> {
    if x.len() != layout.dim() {
        return Err(Error::structure(format!(
            "row has {} coordinates, expected {}",
            x.len(),
            layout.dim()
        )));
    }
    Ok(())
}

/// Laplace-smoothed distribution of the next stage's measurement given an
/// equal-width cell of the coordinates seen so far.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalModel {
    /// Coordinates the cell is computed from.
    prefix: Vec<usize>,
    /// `(lower edge, bin width)` per prefix coordinate.
    bins: Vec<(f64, f64)>,
    bins_per_coordinate: usize,
    /// Coordinates of the next stage.
    next: Vec<usize>,
    /// Distinct next-stage measurements seen in training.
    alphabet: Vec<Vec<f64>>,
    counts: BTreeMap<Vec<usize>, Vec<u64>>,
}

impl ConditionalModel {
    /// Fits the distribution of stage `k + 1` given stage-`k` prefixes.
    /// Fails with an unsupported-configuration error when the next stage takes
    /// more than `max_alphabet` distinct values in `data`.
    pub fn fit(data: &StagedDataset, k: usize, bins_per_coordinate: usize, max_alphabet: usize) -> Result<Self> {
        let layout = data.layout();
        if k + 1 >= layout.num_stages() {
            return Err(Error::input(format!("stage {k} has no next stage")));
        }
        if bins_per_coordinate == 0 {
            return Err(Error::input("at least one bin per coordinate is required"));
        }
        let prefix = layout.prefix(k).to_vec();
        let next = layout.stages()[k + 1].features.clone();

        let mut alphabet: Vec<Vec<f64>> = data
            .rows()
            .map(|x| next.iter().map(|&d| x[d]).collect())
            .collect();
        alphabet.sort_by(|a: &Vec<f64>, b| {
            a.iter().zip(b).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        alphabet.dedup();
        if alphabet.len() > max_alphabet {
            return Err(Error::Unsupported(format!(
                "the stage {} measurement takes {} distinct values (limit {max_alphabet}); \
                 the utility policy needs a discrete next-stage measurement",
                k + 2,
                alphabet.len()
            )));
        }

        let bins = prefix
            .iter()
            .map(|&d| {
                let column = data.features().column(d);
                let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let width = if hi > lo { (hi - lo) / bins_per_coordinate as f64 } else { 1.0 };
                (lo, width)
            })
            .collect();
        let mut model = Self {
            prefix,
            bins,
            bins_per_coordinate,
            next,
            alphabet,
            counts: BTreeMap::new(),
        };
        for x in data.rows() {
            let cell = model.cell(x);
            let symbol = model.symbol(x).expect("alphabet built from the same rows");
            let size = model.alphabet.len();
            model.counts.entry(cell).or_insert_with(|| vec![0; size])[symbol] += 1;
        }
        Ok(model)
    }

    fn cell(&self, x: &[f64]) -> Vec<usize> {
        self.prefix
            .iter()
            .zip(&self.bins)
            .map(|(&d, &(lo, width))| {
                let b = ((x[d] - lo) / width).floor();
                if b <= 0.0 {
                    0
                } else {
                    (b as usize).min(self.bins_per_coordinate - 1)
                }
            })
            .collect()
    }

    fn symbol(&self, x: &[f64]) -> Option<usize> {
        self.alphabet
            .iter()
            .position(|a| a.iter().zip(&self.next).all(|(v, &d)| x[d] == *v))
    }

    pub fn alphabet(&self) -> &[Vec<f64>] {
        &self.alphabet
    }

    /// Next-stage coordinates the alphabet entries fill in.
    pub fn next_coordinates(&self) -> &[usize] {
        &self.next
    }

    /// `P(next = alphabet[j] | cell(x))` for every `j`; sums to 1.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let size = self.alphabet.len();
        let empty = vec![0; size];
        let counts = self.counts.get(&self.cell(x)).unwrap_or(&empty);
        let total = counts.iter().sum::<u64>() as f64 + size as f64;
        counts.iter().map(|&c| (c as f64 + 1.0) / total).collect()
    }
}

/// Per-stage classifiers plus one conditional model per stage transition.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityModel {
    pub classifiers: PerStageClassifiers,
    pub conditionals: Vec<ConditionalModel>,
}

impl UtilityModel {
    pub fn fit(
        classifiers: PerStageClassifiers,
        data: &StagedDataset,
        bins_per_coordinate: usize,
        max_alphabet: usize,
    ) -> Result<Self> {
        let conditionals = (0..classifiers.num_stages() - 1)
            .map(|k| ConditionalModel::fit(data, k, bins_per_coordinate, max_alphabet))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            classifiers,
            conditionals,
        })
    }

    /// Expected absolute change of normalized margin from acquiring stage
    /// `k + 1`: `Σ_v |g_k(x) - g_{k+1}(x, v)| P(v | x)`.
    pub fn utility(&self, k: usize, x: &[f64]) -> f64 {
        let cond = &self.conditionals[k];
        let here = self.classifiers.normalized_score(k, x);
        let mut filled = x.to_vec();
        cond.alphabet()
            .iter()
            .zip(cond.probabilities(x))
            .map(|(value, p)| {
                for (&d, &v) in cond.next_coordinates().iter().zip(value) {
                    filled[d] = v;
                }
                p * (here - self.classifiers.normalized_score(k + 1, &filled)).abs()
            })
            .sum()
    }
}

/// Classifies at stage `k` when the utility of the next stage is below
/// `thresholds[k]`, rejects otherwise (ties reject).
pub fn utility_predict(model: &UtilityModel, thresholds: &[f64], x: &[f64]) -> Result<Prediction> {
    let pc = &model.classifiers;
    check_thresholds(thresholds, pc.num_stages())?;
    check_width(&pc.layout, x)?;
    Ok(pc.route(x, |k| model.utility(k, x) < thresholds[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Stage, Stump};
    use ndarray::array;

    fn two_stage(features: ndarray::Array2<f64>, labels: Vec<i8>) -> StagedDataset {
        let layout = StageLayout::new(vec![
            Stage { features: vec![0], cost: 0.0 },
            Stage { features: vec![1], cost: 0.1 },
        ])
        .unwrap();
        StagedDataset::new(features, labels, layout).unwrap()
    }

    #[test]
    fn second_stage_separates() {
        let data = two_stage(
            array![[0.0, -2.0], [0.0, -1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 3.0]],
            vec![-1, -1, 1, 1, 1],
        );
        let pc = train_per_stage(&data, &BoostConfig::default()).unwrap();
        for (x, &y) in data.rows().zip(data.labels()) {
            assert_eq!(sign(pc.scorers[1].score(x)), f64::from(y));
        }
    }

    #[test]
    fn myopic_extremes() {
        let data = two_stage(array![[0.0, 0.0], [1.0, 1.0]], vec![-1, 1]);
        let pc = PerStageClassifiers {
            layout: data.layout().clone(),
            scorers: vec![AdditiveScorer::constant(0, 0.5), AdditiveScorer::constant(1, -1.0)],
        };
        let x = [0.0, 0.0];
        assert_eq!(myopic_predict(&pc, &[0.0], &x).unwrap().stop_stage, 0);
        let p = myopic_predict(&pc, &[f64::INFINITY], &x).unwrap();
        assert_eq!((p.stop_stage, p.label, p.cost), (1, -1.0, 0.1));
        assert!(myopic_predict(&pc, &[-1.0], &x).is_err());
    }

    #[test]
    fn utility_of_a_coin_flip_is_one() {
        let data = two_stage(array![[0.0, -1.0], [0.0, 1.0]], vec![-1, 1]);
        let mut next = AdditiveScorer::constant(1, 0.0);
        next.push(Stump::new(1, 0.0, 1), 1.0);
        let pc = PerStageClassifiers {
            layout: data.layout().clone(),
            scorers: vec![AdditiveScorer::constant(0, 0.0), next],
        };
        let model = UtilityModel::fit(pc, &data, 4, 50).unwrap();
        assert_eq!(model.conditionals[0].probabilities(&[0.0, 5.0]), vec![0.5, 0.5]);
        assert!((model.utility(0, &[0.0, 5.0]) - 1.0).abs() < 1e-15);
        assert_eq!(utility_predict(&model, &[1.0], &[0.0, 5.0]).unwrap().stop_stage, 1);
        assert_eq!(utility_predict(&model, &[1.5], &[0.0, 5.0]).unwrap().stop_stage, 0);
    }

    #[test]
    fn continuous_next_stage_is_unsupported() {
        let features = ndarray::Array2::from_shape_fn((100, 2), |(i, j)| (i * (j + 1)) as f64 * 0.37);
        let labels = (0..100).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let data = two_stage(features, labels);
        assert!(matches!(
            ConditionalModel::fit(&data, 0, 20, 50),
            Err(Error::Unsupported(_))
        ));
    }
}
