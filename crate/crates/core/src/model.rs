//! Staged datasets, stump ensembles, and the cascade prediction rule.

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// `+1` for `z >= 0`, `-1` otherwise.
#[inline]
pub fn sign(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One acquisition stage: the feature coordinates it reveals and the cost of
/// entering it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub features: Vec<usize>,
    pub cost: f64,
}

/// Ordered partition of the feature coordinates into acquisition stages.
///
/// The first stage is free; `cost(k)` for `k >= 1` is the penalty paid at stage
/// `k - 1` to reject an example into stage `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StageLayout {
    stages: Vec<Stage>,
    dim: usize,
    prefixes: Vec<Vec<usize>>,
    masks: Vec<Vec<bool>>,
}

impl StageLayout {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::structure("a layout needs at least one stage"));
        }
        if stages[0].cost != 0.0 {
            return Err(Error::structure(format!(
                "the first stage is free, got cost {}",
                stages[0].cost
            )));
        }
        for (k, stage) in stages.iter().enumerate() {
            if !(stage.cost.is_finite() && stage.cost >= 0.0) {
                return Err(Error::structure(format!(
                    "stage {k} has invalid cost {}",
                    stage.cost
                )));
            }
            if stage.features.is_empty() {
                return Err(Error::structure(format!("stage {k} has no features")));
            }
        }
        let dim = stages.iter().map(|s| s.features.len()).sum::<usize>();
        let mut owner = vec![None; dim];
        for (k, stage) in stages.iter().enumerate() {
            for &f in &stage.features {
                if f >= dim {
                    return Err(Error::structure(format!(
                        "stage {k} lists coordinate {f} but the layout covers {dim} coordinates"
                    )));
                }
                if let Some(prev) = owner[f] {
                    return Err(Error::structure(format!(
                        "coordinate {f} assigned to stages {prev} and {k}"
                    )));
                }
                owner[f] = Some(k);
            }
        }
        let mut prefixes = Vec::with_capacity(stages.len());
        let mut masks = Vec::with_capacity(stages.len());
        let mut mask = vec![false; dim];
        for stage in &stages {
            for &f in &stage.features {
                mask[f] = true;
            }
            prefixes.push((0..dim).filter(|&f| mask[f]).collect());
            masks.push(mask.clone());
        }
        Ok(Self {
            stages,
            dim,
            prefixes,
            masks,
        })
    }

    /// Consecutive coordinate blocks: stage `k` owns the next `sizes[k]`
    /// coordinates. `deltas` are the entry costs of stages `1..K`.
    pub fn contiguous(sizes: &[usize], deltas: &[f64]) -> Result<Self> {
        if deltas.len() + 1 != sizes.len() {
            return Err(Error::structure(format!(
                "{} stages need {} costs, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                deltas.len()
            )));
        }
        let mut next = 0;
        let stages = sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let features = (next..next + n).collect();
                next += n;
                Stage {
                    features,
                    cost: if k == 0 { 0.0 } else { deltas[k - 1] },
                }
            })
            .collect();
        Self::new(stages)
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Sorted coordinates visible at stage `k` (stages `0..=k`).
    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.prefixes[k]
    }

    pub fn is_visible(&self, k: usize, coordinate: usize) -> bool {
        self.masks[k].get(coordinate).copied().unwrap_or(false)
    }

    /// Cost of entering stage `k`; zero for the first stage.
    pub fn cost(&self, k: usize) -> f64 {
        self.stages[k].cost
    }

    /// Entry costs of stages `1..K`.
    pub fn deltas(&self) -> Vec<f64> {
        self.stages[1..].iter().map(|s| s.cost).collect()
    }

    /// Same partition with new entry costs for stages `1..K`.
    pub fn with_deltas(&self, deltas: &[f64]) -> Result<Self> {
        if deltas.len() + 1 != self.stages.len() {
            return Err(Error::structure(format!(
                "{} stages need {} costs, got {}",
                self.stages.len(),
                self.stages.len() - 1,
                deltas.len()
            )));
        }
        let mut stages = self.stages.clone();
        for (stage, &d) in stages[1..].iter_mut().zip(deltas) {
            stage.cost = d;
        }
        Self::new(stages)
    }
}

impl Serialize for StageLayout {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.stages.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StageLayout {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let stages = Vec::<Stage>::deserialize(d)?;
        StageLayout::new(stages).map_err(serde::de::Error::custom)
    }
}

/// Labeled examples with a stage layout over their coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StagedDataset {
    features: Array2<f64>,
    labels: Vec<i8>,
    layout: StageLayout,
}

impl StagedDataset {
    pub fn new(features: Array2<f64>, labels: Vec<i8>, layout: StageLayout) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::input("dataset has no rows"));
        }
        if labels.len() != n {
            return Err(Error::structure(format!(
                "{n} feature rows but {} labels",
                labels.len()
            )));
        }
        if d != layout.dim() {
            return Err(Error::structure(format!(
                "features have {d} columns, layout covers {}",
                layout.dim()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::input(format!(
                "label {} at row {i} is not +1 or -1",
                labels[i]
            )));
        }
        if let Some(((i, j), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::input(format!("non-finite value {v} at row {i}, column {j}")));
        }
        let features = features.as_standard_layout().into_owned();
        Ok(Self {
            features,
            labels,
            layout,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features
            .as_slice()
            .expect("standard layout")
            .chunks_exact(self.dim())
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Label as `±1.0`.
    pub fn y(&self, i: usize) -> f64 {
        f64::from(self.labels[i])
    }

    pub fn layout(&self) -> &StageLayout {
        &self.layout
    }

    pub fn with_layout(&self, layout: StageLayout) -> Result<Self> {
        Self::new(self.features.clone(), self.labels.clone(), layout)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels, self.layout.clone())
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (pos, self.len() - pos)
    }
}

/// Axis-aligned threshold classifier `polarity * sign(x[dimension] - threshold)`.
///
/// Thresholds may be `±inf`, which makes the stump constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stump {
    pub dimension: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    pub fn new(dimension: usize, threshold: f64, polarity: i8) -> Self {
        debug_assert!(polarity == 1 || polarity == -1);
        Self {
            dimension,
            threshold,
            polarity,
        }
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        f64::from(self.polarity) * sign(x[self.dimension] - self.threshold)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedStump {
    pub stump: Stump,
    pub weight: f64,
}

/// `bias + Σ weight_j * stump_j(x)`, restricted to the coordinates visible at
/// `stage`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdditiveScorer {
    pub stage: usize,
    pub bias: f64,
    pub terms: Vec<WeightedStump>,
}

impl AdditiveScorer {
    pub fn constant(stage: usize, bias: f64) -> Self {
        Self {
            stage,
            bias,
            terms: Vec::new(),
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.bias, |acc, t| acc + t.weight * t.stump.predict(x))
    }

    pub fn scores(&self, data: &StagedDataset) -> Vec<f64> {
        data.rows().map(|x| self.score(x)).collect()
    }

    pub fn push(&mut self, stump: Stump, weight: f64) {
        self.terms.push(WeightedStump { stump, weight });
    }

    /// `Σ |weight_j|`, the ℓ1 size of the ensemble (bias excluded).
    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).sum()
    }

    /// Every weight multiplied by `factor`, bias included.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            stage: self.stage,
            bias: self.bias * factor,
            terms: self
                .terms
                .iter()
                .map(|t| WeightedStump {
                    stump: t.stump,
                    weight: t.weight * factor,
                })
                .collect(),
        }
    }

    pub fn validate(&self, layout: &StageLayout) -> Result<()> {
        if self.stage >= layout.num_stages() {
            return Err(Error::structure(format!(
                "scorer for stage {} but the layout has {} stages",
                self.stage,
                layout.num_stages()
            )));
        }
        if !self.bias.is_finite() {
            return Err(Error::structure("scorer bias is not finite"));
        }
        for t in &self.terms {
            if !layout.is_visible(self.stage, t.stump.dimension) {
                return Err(Error::structure(format!(
                    "stage {} scorer reads coordinate {}, which is acquired later",
                    self.stage, t.stump.dimension
                )));
            }
            if !t.weight.is_finite() {
                return Err(Error::structure("scorer weight is not finite"));
            }
            if t.stump.polarity != 1 && t.stump.polarity != -1 {
                return Err(Error::structure("stump polarity must be +1 or -1"));
            }
            if t.stump.threshold.is_nan() {
                return Err(Error::structure("stump threshold is NaN"));
            }
        }
        Ok(())
    }
}

/// The two biased scorers of a reject stage; they classify where their signs
/// agree and reject where they disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectPair {
    pub positive: AdditiveScorer,
    pub negative: AdditiveScorer,
}

impl RejectPair {
    /// `Some(label)` when the signs agree, `None` for reject.
    pub fn decide(&self, x: &[f64]) -> Option<f64> {
        let p = sign(self.positive.score(x));
        let n = sign(self.negative.score(x));
        (p == n).then_some(p)
    }
}

/// Outcome of routing one example through a cascade.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: f64,
    /// Zero-based stage at which the example was classified.
    pub stop_stage: usize,
    /// Total acquisition cost of the stages entered.
    pub cost: f64,
}

/// `K - 1` reject stages followed by a terminal scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiStageModel {
    layout: StageLayout,
    reject_stages: Vec<RejectPair>,
    terminal: AdditiveScorer,
}

impl MultiStageModel {
    pub fn new(
        layout: StageLayout,
        reject_stages: Vec<RejectPair>,
        terminal: AdditiveScorer,
    ) -> Result<Self> {
        let k = layout.num_stages();
        if reject_stages.len() + 1 != k {
            return Err(Error::structure(format!(
                "{k} stages need {} reject pairs, got {}",
                k - 1,
                reject_stages.len()
            )));
        }
        for (s, pair) in reject_stages.iter().enumerate() {
            for scorer in [&pair.positive, &pair.negative] {
                if scorer.stage != s {
                    return Err(Error::structure(format!(
                        "reject pair {s} holds a scorer for stage {}",
                        scorer.stage
                    )));
                }
                scorer.validate(&layout)?;
            }
        }
        if terminal.stage != k - 1 {
            return Err(Error::structure(format!(
                "terminal scorer is for stage {}, expected {}",
                terminal.stage,
                k - 1
            )));
        }
        terminal.validate(&layout)?;
        Ok(Self {
            layout,
            reject_stages,
            terminal,
        })
    }

    pub fn layout(&self) -> &StageLayout {
        &self.layout
    }

    pub fn num_stages(&self) -> usize {
        self.layout.num_stages()
    }

    pub fn reject_stages(&self) -> &[RejectPair] {
        &self.reject_stages
    }

    pub fn reject_stage_mut(&mut self, k: usize) -> &mut RejectPair {
        &mut self.reject_stages[k]
    }

    pub fn terminal(&self) -> &AdditiveScorer {
        &self.terminal
    }

    pub fn terminal_mut(&mut self) -> &mut AdditiveScorer {
        &mut self.terminal
    }

    /// Same scorers under a layout with different entry costs.
    pub fn with_layout(&self, layout: StageLayout) -> Result<Self> {
        if layout.stages().iter().map(|s| &s.features).ne(self
            .layout
            .stages()
            .iter()
            .map(|s| &s.features))
        {
            return Err(Error::structure("layouts partition the coordinates differently"));
        }
        Self::new(layout, self.reject_stages.clone(), self.terminal.clone())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.layout.dim() {
            return Err(Error::structure(format!(
                "row has {} coordinates, model expects {}",
                x.len(),
                self.layout.dim()
            )));
        }
        Ok(self.route(x))
    }

    fn route(&self, x: &[f64]) -> Prediction {
        let mut cost = 0.0;
        for (k, pair) in self.reject_stages.iter().enumerate() {
            if let Some(label) = pair.decide(x) {
                return Prediction {
                    label,
                    stop_stage: k,
                    cost,
                };
            }
            cost += self.layout.cost(k + 1);
        }
        Prediction {
            label: sign(self.terminal.score(x)),
            stop_stage: self.reject_stages.len(),
            cost,
        }
    }

    /// Mean over examples of acquisition cost paid plus the 0/1 error.
    pub fn empirical_hard_risk(&self, data: &StagedDataset) -> Result<f64> {
        if data.dim() != self.layout.dim() {
            return Err(Error::structure(format!(
                "dataset has {} coordinates, model expects {}",
                data.dim(),
                self.layout.dim()
            )));
        }
        let total: f64 = data
            .rows()
            .zip(data.labels())
            .map(|(x, &y)| {
                let p = self.route(x);
                p.cost + if p.label != f64::from(y) { 1.0 } else { 0.0 }
            })
            .sum();
        Ok(total / data.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ModelDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::Document {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            }
        })?;
        doc.try_into()
    }
}

pub const MODEL_FORMAT: &str = "stagewise-model";
pub const MODEL_VERSION: u32 = 1;

/// Threshold encoded as a JSON number, or `"inf"` / `"-inf"` for constant stumps.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Threshold(f64);

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Threshold(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Threshold(f64::INFINITY)),
                "-inf" => Ok(Threshold(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "threshold must be a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDocument {
    dimension: usize,
    threshold: Threshold,
    polarity: i8,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScorerDocument {
    bias: f64,
    terms: Vec<TermDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDocument {
    positive: ScorerDocument,
    negative: ScorerDocument,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format: String,
    version: u32,
    layout: StageLayout,
    reject_stages: Vec<PairDocument>,
    terminal: ScorerDocument,
}

impl ScorerDocument {
    fn from_scorer(s: &AdditiveScorer) -> Self {
        Self {
            bias: s.bias,
            terms: s
                .terms
                .iter()
                .map(|t| TermDocument {
                    dimension: t.stump.dimension,
                    threshold: Threshold(t.stump.threshold),
                    polarity: t.stump.polarity,
                    weight: t.weight,
                })
                .collect(),
        }
    }

    fn into_scorer(self, stage: usize) -> AdditiveScorer {
        AdditiveScorer {
            stage,
            bias: self.bias,
            terms: self
                .terms
                .into_iter()
                .map(|t| WeightedStump {
                    stump: Stump {
                        dimension: t.dimension,
                        threshold: t.threshold.0,
                        polarity: t.polarity,
                    },
                    weight: t.weight,
                })
                .collect(),
        }
    }
}

impl From<&MultiStageModel> for ModelDocument {
    fn from(m: &MultiStageModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            layout: m.layout.clone(),
            reject_stages: m
                .reject_stages
                .iter()
                .map(|p| PairDocument {
                    positive: ScorerDocument::from_scorer(&p.positive),
                    negative: ScorerDocument::from_scorer(&p.negative),
                })
                .collect(),
            terminal: ScorerDocument::from_scorer(&m.terminal),
        }
    }
}

impl TryFrom<ModelDocument> for MultiStageModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT {
            return Err(Error::Document {
                path: "format".into(),
                message: format!("expected {MODEL_FORMAT:?}, got {:?}", doc.format),
            });
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Document {
                path: "version".into(),
                message: format!("unsupported version {}", doc.version),
            });
        }
        let terminal_stage = doc.layout.num_stages() - 1;
        let reject_stages = doc
            .reject_stages
            .into_iter()
            .enumerate()
            .map(|(k, p)| RejectPair {
                positive: p.positive.into_scorer(k),
                negative: p.negative.into_scorer(k),
            })
            .collect();
        MultiStageModel::new(
            doc.layout,
            reject_stages,
            doc.terminal.into_scorer(terminal_stage),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_stage(delta: f64) -> StageLayout {
        StageLayout::contiguous(&[1, 1], &[delta]).unwrap()
    }

    fn pair(stage: usize, p: f64, n: f64) -> RejectPair {
        RejectPair {
            positive: AdditiveScorer::constant(stage, p),
            negative: AdditiveScorer::constant(stage, n),
        }
    }

    #[test]
    fn layout_rejects_overlap_and_gaps() {
        let overlap = StageLayout::new(vec![
            Stage { features: vec![0, 1], cost: 0.0 },
            Stage { features: vec![1], cost: 0.1 },
        ]);
        assert!(overlap.is_err());
        let costly_first = StageLayout::new(vec![
            Stage { features: vec![0], cost: 0.2 },
            Stage { features: vec![1], cost: 0.1 },
        ]);
        assert!(costly_first.is_err());
        let gap = StageLayout::new(vec![
            Stage { features: vec![0], cost: 0.0 },
            Stage { features: vec![2], cost: 0.1 },
        ]);
        assert!(gap.is_err());
    }

    #[test]
    fn prefixes_accumulate() {
        let layout = StageLayout::new(vec![
            Stage { features: vec![2], cost: 0.0 },
            Stage { features: vec![0, 3], cost: 0.1 },
            Stage { features: vec![1], cost: 0.2 },
        ])
        .unwrap();
        assert_eq!(layout.prefix(0), &[2]);
        assert_eq!(layout.prefix(1), &[0, 2, 3]);
        assert_eq!(layout.prefix(2), &[0, 1, 2, 3]);
        assert!(!layout.is_visible(1, 1));
        assert_eq!(layout.deltas(), vec![0.1, 0.2]);
    }

    #[test]
    fn stump_sign_convention() {
        let s = Stump::new(0, 1.0, 1);
        assert_eq!(s.predict(&[1.0]), 1.0);
        assert_eq!(s.predict(&[0.999]), -1.0);
        assert_eq!(Stump::new(0, 1.0, -1).predict(&[1.0]), -1.0);
        assert_eq!(Stump::new(0, f64::NEG_INFINITY, 1).predict(&[-1e300]), 1.0);
        assert_eq!(Stump::new(0, f64::INFINITY, 1).predict(&[1e300]), -1.0);
    }

    #[test]
    fn agreement_classifies_at_first_stage() {
        let m = MultiStageModel::new(
            two_stage(0.3),
            vec![pair(0, 1.0, 1.0)],
            AdditiveScorer::constant(1, -1.0),
        )
        .unwrap();
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p, Prediction { label: 1.0, stop_stage: 0, cost: 0.0 });
    }

    #[test]
    fn disagreement_rejects_and_pays() {
        let m = MultiStageModel::new(
            two_stage(0.3),
            vec![pair(0, -1.0, 1.0)],
            AdditiveScorer::constant(1, -1.0),
        )
        .unwrap();
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p, Prediction { label: -1.0, stop_stage: 1, cost: 0.3 });
    }

    #[test]
    fn costs_add_along_the_rejection_path() {
        let layout = StageLayout::contiguous(&[1, 1, 1], &[0.1, 0.2]).unwrap();
        let m = MultiStageModel::new(
            layout,
            vec![pair(0, -1.0, 1.0), pair(1, 1.0, -1.0)],
            AdditiveScorer::constant(2, 1.0),
        )
        .unwrap();
        let p = m.predict(&[0.0; 3]).unwrap();
        assert_eq!(p.stop_stage, 2);
        assert!((p.cost - 0.3).abs() < 1e-15);
    }

    #[test]
    fn predict_checks_row_width() {
        let m = MultiStageModel::new(
            two_stage(0.3),
            vec![pair(0, 1.0, 1.0)],
            AdditiveScorer::constant(1, 1.0),
        )
        .unwrap();
        assert!(matches!(m.predict(&[0.0]), Err(Error::Structure(_))));
    }

    #[test]
    fn scorer_cannot_read_future_coordinates() {
        let mut fp = AdditiveScorer::constant(0, 0.0);
        fp.push(Stump::new(1, 0.0, 1), 1.0);
        let r = MultiStageModel::new(
            two_stage(0.1),
            vec![RejectPair { positive: fp, negative: AdditiveScorer::constant(0, 0.0) }],
            AdditiveScorer::constant(1, 0.0),
        );
        assert!(matches!(r, Err(Error::Structure(_))));
    }

    fn toy() -> StagedDataset {
        // Five points whose class is decided by x1 alone, five in the band
        // |x1| < 1 whose class is decided by x2.
        let x = array![
            [-3.0, 0.0],
            [-2.5, 1.0],
            [2.5, 0.0],
            [3.0, 1.0],
            [3.5, -1.0],
            [-0.5, 2.0],
            [0.5, -2.0],
            [0.0, 2.5],
            [-0.2, -1.5],
            [0.3, 1.8],
        ];
        let y = vec![-1, -1, 1, 1, 1, 1, -1, 1, -1, 1];
        StagedDataset::new(x, y, two_stage(0.2)).unwrap()
    }

    fn toy_terminal() -> AdditiveScorer {
        let mut t = AdditiveScorer::constant(1, 0.0);
        t.push(Stump::new(1, 0.0, 1), 1.0);
        t.push(Stump::new(0, 1.0, 1), 2.0);
        t.push(Stump::new(0, -1.0, 1), 2.0);
        t
    }

    #[test]
    fn partial_reject_matches_full_reject_at_half_cost() {
        let data = toy();
        let layout = data.layout().clone();

        let mut stage1 = AdditiveScorer::constant(0, 0.0);
        stage1.push(Stump::new(0, 0.0, 1), 1.0);
        let classify_all = MultiStageModel::new(
            layout.clone(),
            vec![RejectPair { positive: stage1.clone(), negative: stage1 }],
            toy_terminal(),
        )
        .unwrap();
        let reject_all = MultiStageModel::new(
            layout.clone(),
            vec![pair(0, -1.0, 1.0)],
            toy_terminal(),
        )
        .unwrap();
        let mut fp = AdditiveScorer::constant(0, 0.0);
        fp.push(Stump::new(0, -1.0, 1), 1.0);
        let mut fn_ = AdditiveScorer::constant(0, 0.0);
        fn_.push(Stump::new(0, 1.0, 1), 1.0);
        let partial = MultiStageModel::new(
            layout,
            vec![RejectPair { positive: fp, negative: fn_ }],
            toy_terminal(),
        )
        .unwrap();

        let errors = |m: &MultiStageModel| {
            data.rows()
                .zip(data.labels())
                .filter(|(x, &y)| m.predict(x).unwrap().label != f64::from(y))
                .count()
        };
        let cost = |m: &MultiStageModel| {
            data.rows().map(|x| m.predict(x).unwrap().cost).sum::<f64>()
        };

        assert_eq!(errors(&classify_all), 2);
        assert_eq!(errors(&reject_all), 0);
        assert_eq!(errors(&partial), 0);
        assert!((cost(&reject_all) - 2.0 * cost(&partial)).abs() < 1e-12);
        assert!((reject_all.empirical_hard_risk(&data).unwrap() - 0.2).abs() < 1e-12);
        assert!((partial.empirical_hard_risk(&data).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn hard_risk_trivial_cases() {
        let x = array![[-2.0, 0.0], [-1.0, 5.0], [1.0, -5.0], [2.0, 0.0]];
        let data = StagedDataset::new(x, vec![-1, -1, 1, 1], two_stage(0.25)).unwrap();
        let mut by_x1 = AdditiveScorer::constant(0, 0.0);
        by_x1.push(Stump::new(0, 0.0, 1), 1.0);
        let mut terminal = AdditiveScorer::constant(1, 0.0);
        terminal.push(Stump::new(0, 0.0, 1), 1.0);

        let early = MultiStageModel::new(
            data.layout().clone(),
            vec![RejectPair { positive: by_x1.clone(), negative: by_x1 }],
            terminal.clone(),
        )
        .unwrap();
        assert_eq!(early.empirical_hard_risk(&data).unwrap(), 0.0);

        let late = MultiStageModel::new(data.layout().clone(), vec![pair(0, -1.0, 1.0)], terminal)
            .unwrap();
        assert!((late.empirical_hard_risk(&data).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let data = toy();
        let mut fp = AdditiveScorer::constant(0, -0.1234567890123);
        fp.push(Stump::new(0, f64::NEG_INFINITY, 1), 0.1 + 0.2);
        fp.push(Stump::new(0, 1.0 / 3.0, -1), 1e-300);
        let mut fn_ = AdditiveScorer::constant(0, 1.0);
        fn_.push(Stump::new(0, f64::INFINITY, -1), std::f64::consts::PI);
        let m = MultiStageModel::new(
            data.layout().clone(),
            vec![RejectPair { positive: fp, negative: fn_ }],
            toy_terminal(),
        )
        .unwrap();
        let text = m.to_json().unwrap();
        let back = MultiStageModel::from_json(&text).unwrap();
        assert_eq!(m, back);
        assert!(text.contains("\"-inf\""));
    }

    #[test]
    fn malformed_model_reports_path() {
        let bad = r#"{"format":"stagewise-model","version":1,
            "layout":[{"features":[0],"cost":0.0},{"features":[1],"cost":0.1}],
            "reject_stages":[{"positive":{"bias":0.0,"terms":[{"dimension":0,"threshold":"up","polarity":1,"weight":1.0}]},
                              "negative":{"bias":0.0,"terms":[]}}],
            "terminal":{"bias":0.0,"terms":[]}}"#;
        match MultiStageModel::from_json(bad) {
            Err(Error::Document { path, .. }) => {
                assert!(path.contains("reject_stages[0].positive.terms[0].threshold"), "{path}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
