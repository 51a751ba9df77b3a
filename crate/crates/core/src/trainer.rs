//! Stage-wise coordinate descent on the global surrogate risk.
//!
//! Each outer loop visits the stages in the order `K-1, K-2, ..., 0, 1, ...,
//! K-2` (zero-based). A reject stage is refit as two weighted boosting
//! problems, one per scorer with its partner held fixed; the terminal stage is
//! one weighted boosting problem. Every subproblem objective equals the global
//! surrogate up to an additive constant, and boosting only accepts steps that
//! lower it, so the recorded risk never increases.

use serde::{Deserialize, Serialize};

use crate::boosting::{fit_with_search, BoostConfig, Loss, StumpSearch};
use crate::error::{Error, Result};
use crate::model::{AdditiveScorer, MultiStageModel, RejectPair, StageLayout, StagedDataset};
use crate::surrogate::{
    risk_from_scores, sigmoid_loss, ErrorPenalty, ScoreTable, SurrogateState,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub boost: BoostConfig,
    /// Number of full backward/forward sweeps over the stages.
    pub outer_loops: usize,
    /// Entry costs of stages `1..K`.
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub penalty: ErrorPenalty,
}

impl TrainConfig {
    pub fn new(deltas: Vec<f64>) -> Self {
        Self {
            boost: BoostConfig::default(),
            outer_loops: 10,
            deltas,
            penalty: ErrorPenalty::BALANCED,
        }
    }

    pub fn validate(&self, layout: &StageLayout) -> Result<()> {
        self.boost.validate()?;
        if self.boost.loss != Loss::Sigmoid {
            return Err(Error::input("the stage-wise trainer needs the sigmoid loss"));
        }
        if self.outer_loops == 0 {
            return Err(Error::input("outer_loops must be at least 1"));
        }
        if self.deltas.len() + 1 != layout.num_stages() {
            return Err(Error::input(format!(
                "{} stages need {} costs, got {}",
                layout.num_stages(),
                layout.num_stages() - 1,
                self.deltas.len()
            )));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::input(format!("stage costs must be finite and >= 0, got {d}")));
        }
        let ErrorPenalty { positive, negative } = self.penalty;
        if !(positive.is_finite() && positive > 0.0 && negative.is_finite() && negative > 0.0) {
            return Err(Error::input("error penalties must be finite and > 0"));
        }
        Ok(())
    }
}

/// Which scorer of a reject pair is being refit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairRole {
    Positive,
    Negative,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: MultiStageModel,
    /// Global surrogate risk of the initial model.
    pub initial_risk: f64,
    /// Global surrogate risk after each stage visit.
    pub risk_trace: Vec<f64>,
    /// Stage refit at each visit, parallel to `risk_trace`.
    pub schedule: Vec<usize>,
}

/// Reject-everything starting point: every reject pair is a pair of opposite
/// constants (`-1` positive-biased, `+1` negative-biased) and the terminal
/// scorer is the zero function.
pub fn initialize(layout: &StageLayout) -> MultiStageModel {
    let k = layout.num_stages();
    let pairs = (0..k - 1)
        .map(|s| RejectPair {
            positive: AdditiveScorer::constant(s, -1.0),
            negative: AdditiveScorer::constant(s, 1.0),
        })
        .collect();
    MultiStageModel::new(layout.clone(), pairs, AdditiveScorer::constant(k - 1, 0.0))
        .expect("constant scorers fit every layout")
}

/// Zero-based stage order of one outer loop: last stage, back to the first,
/// then forward to the second-to-last.
pub fn stage_schedule(num_stages: usize) -> Vec<usize> {
    let back = (0..num_stages).rev();
    let forward = 1..num_stages.saturating_sub(1);
    back.chain(forward).collect()
}

/// Per-example weights of the subproblem for one scorer of reject stage `k`,
/// given the partner's scores:
/// `S[i][k] (w(y) C(y partner) + D[i][k] - 2 C(y partner) D[i][k])`.
///
/// The weights can be negative when the cost-to-go exceeds the error penalty.
pub fn stage_weights(
    k: usize,
    partner_scores: &[f64],
    labels: &[i8],
    state: &SurrogateState,
    penalty: ErrorPenalty,
) -> Vec<f64> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let y = f64::from(l);
            let c = sigmoid_loss(y * partner_scores[i]);
            let d = state.cost_to_go[[i, k]];
            state.state[[i, k]] * (penalty.for_label(y) * c + d - 2.0 * c * d)
        })
        .collect()
}

/// [`stage_weights`] for the `role` scorer of stage `k` of `model`.
pub fn stage_weights_for(
    role: PairRole,
    k: usize,
    model: &MultiStageModel,
    data: &StagedDataset,
    state: &SurrogateState,
    penalty: ErrorPenalty,
) -> Vec<f64> {
    let pair = &model.reject_stages()[k];
    let partner = match role {
        PairRole::Positive => &pair.negative,
        PairRole::Negative => &pair.positive,
    };
    stage_weights(k, &partner.scores(data), data.labels(), state, penalty)
}

/// Folds signed weights into non-negative ones: `w C(y f) = |w| C(-y f) - |w|`
/// for `w < 0`, so flipping the label of a negatively weighted example
/// preserves the objective up to a constant.
fn fold_signs(weights: &[f64], labels: &[i8]) -> (Vec<f64>, Vec<i8>) {
    weights
        .iter()
        .zip(labels)
        .map(|(&w, &y)| if w < 0.0 { (-w, -y) } else { (w, y) })
        .unzip()
}

pub fn train(data: &StagedDataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate(data.layout())?;
    let layout = data.layout().with_deltas(&cfg.deltas)?;
    let data = data.with_layout(layout.clone())?;
    let num_stages = layout.num_stages();
    let labels = data.labels();
    let penalty = cfg.penalty;

    let searches = (0..num_stages)
        .map(|k| StumpSearch::new(&data, layout.prefix(k)))
        .collect::<Result<Vec<_>>>()?;

    let mut model = initialize(&layout);
    let mut scores = ScoreTable::compute(&model, &data);
    let initial_risk = risk_from_scores(&scores, labels, &cfg.deltas, penalty);
    let mut risk_trace = Vec::new();
    let mut schedule = Vec::new();

    for _ in 0..cfg.outer_loops {
        for k in stage_schedule(num_stages) {
            let state = SurrogateState::from_scores(&scores, labels, &cfg.deltas, penalty);
            if k + 1 == num_stages {
                let weights: Vec<f64> = labels
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| state.state[[i, k]] * penalty.for_label(f64::from(y)))
                    .collect();
                let report = fit_with_search(
                    &searches[k],
                    &data,
                    k,
                    &weights,
                    labels,
                    model.terminal(),
                    &cfg.boost,
                )?;
                *model.terminal_mut() = report.scorer;
                scores.terminal = model.terminal().scores(&data);
            } else {
                for role in [PairRole::Positive, PairRole::Negative] {
                    let (partner, current) = match role {
                        PairRole::Positive => (&scores.negative[k], &model.reject_stages()[k].positive),
                        PairRole::Negative => (&scores.positive[k], &model.reject_stages()[k].negative),
                    };
                    let signed = stage_weights(k, partner, labels, &state, penalty);
                    let (weights, targets) = fold_signs(&signed, labels);
                    let report = fit_with_search(
                        &searches[k],
                        &data,
                        k,
                        &weights,
                        &targets,
                        current,
                        &cfg.boost,
                    )?;
                    let refreshed = report.scorer.scores(&data);
                    let pair = model.reject_stage_mut(k);
                    match role {
                        PairRole::Positive => {
                            pair.positive = report.scorer;
                            scores.positive[k] = refreshed;
                        }
                        PairRole::Negative => {
                            pair.negative = report.scorer;
                            scores.negative[k] = refreshed;
                        }
                    }
                }
            }
            risk_trace.push(risk_from_scores(&scores, labels, &cfg.deltas, penalty));
            schedule.push(k);
        }
    }

    Ok(TrainOutput {
        model,
        initial_risk,
        risk_trace,
        schedule,
    })
}
