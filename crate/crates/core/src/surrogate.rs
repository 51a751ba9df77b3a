//! Smooth surrogate of the multi-stage risk.
//!
//! The 0/1 error indicator is replaced by the sigmoid loss `C(z) = 1/(1+e^z)`
//! evaluated at the margin `z = y f(x)`, and the reject indicator of a scorer
//! pair by `C_r = a + b - 2ab` with `a`, `b` the sigmoid losses of the two
//! scorers. Per example `i` and stage `k`:
//!
//! ```text
//! S[i][0]   = 1
//! S[i][k+1] = S[i][k] * C_r(k)
//! D[i][K-2] = delta(K-1) + w(y) C(y f_K)
//! D[i][k]   = delta(k+1) + w(y) C(y fp_{k+1}) C(y fn_{k+1}) + D[i][k+1] C_r(k+1)
//! R         = mean_i  Σ_k S[i][k] (w(y) C(y fp_k) C(y fn_k) + delta(k+1) C_r(k))
//!                   + S[i][K-1] w(y) C(y f_K)
//! ```
//!
//! `S` is the soft "still active" state, `D` the soft cost-to-go, and `w(y)` the
//! class-conditional error penalty (both 1 in the balanced case). All sums run
//! in a fixed example order, so results are reproducible bit for bit.

use ndarray::Array2;

use crate::model::{MultiStageModel, StagedDataset};

/// Sigmoid loss `1 / (1 + e^z)`, evaluated through `e^{-|z|}` so it never
/// overflows. Exact to double precision for `|z| <= 700`.
#[inline]
pub fn sigmoid_loss(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `-C'(z) = C(z) (1 - C(z)) = C(z) C(-z)`.
#[inline]
pub fn sigmoid_slope(z: f64) -> f64 {
    sigmoid_loss(z) * sigmoid_loss(-z)
}

/// Soft disagreement of a scorer pair on an example with label `y`.
#[inline]
pub fn reject_surrogate(sp: f64, sn: f64, y: f64) -> f64 {
    reject_from_losses(sigmoid_loss(y * sp), sigmoid_loss(y * sn))
}

#[inline]
pub(crate) fn reject_from_losses(a: f64, b: f64) -> f64 {
    a + b - 2.0 * a * b
}

/// Class-conditional multipliers on the error terms of the risk.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ErrorPenalty {
    /// Penalty for misclassifying a positive example.
    pub positive: f64,
    /// Penalty for misclassifying a negative example.
    pub negative: f64,
}

impl ErrorPenalty {
    pub const BALANCED: ErrorPenalty = ErrorPenalty {
        positive: 1.0,
        negative: 1.0,
    };

    /// Penalties with ratio `positive / negative = ratio` and mean 1.
    pub fn from_ratio(ratio: f64) -> Self {
        ErrorPenalty {
            positive: 2.0 * ratio / (1.0 + ratio),
            negative: 2.0 / (1.0 + ratio),
        }
    }

    #[inline]
    pub fn for_label(&self, y: f64) -> f64 {
        if y > 0.0 {
            self.positive
        } else {
            self.negative
        }
    }
}

impl Default for ErrorPenalty {
    fn default() -> Self {
        Self::BALANCED
    }
}

/// Raw scores of every scorer of a model on every example of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    /// `positive[k][i]`: score of the stage-`k` positive-biased scorer.
    pub positive: Vec<Vec<f64>>,
    /// `negative[k][i]`: score of the stage-`k` negative-biased scorer.
    pub negative: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
}

impl ScoreTable {
    pub fn compute(model: &MultiStageModel, data: &StagedDataset) -> Self {
        let (positive, negative) = model
            .reject_stages()
            .iter()
            .map(|p| (p.positive.scores(data), p.negative.scores(data)))
            .unzip();
        Self {
            positive,
            negative,
            terminal: model.terminal().scores(data),
        }
    }

    pub fn num_stages(&self) -> usize {
        self.positive.len() + 1
    }

    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }
}

/// Soft active-state `S` (N×K) and soft cost-to-go `D` (N×(K−1)).
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateState {
    pub state: Array2<f64>,
    pub cost_to_go: Array2<f64>,
}

impl SurrogateState {
    pub fn from_scores(
        scores: &ScoreTable,
        labels: &[i8],
        deltas: &[f64],
        penalty: ErrorPenalty,
    ) -> Self {
        let n = scores.len();
        let k = scores.num_stages();
        assert_eq!(deltas.len() + 1, k, "one cost per reject stage");
        let mut state = Array2::<f64>::zeros((n, k));
        let mut cost_to_go = Array2::<f64>::zeros((n, k - 1));
        for i in 0..n {
            let y = f64::from(labels[i]);
            let w = penalty.for_label(y);
            state[[i, 0]] = 1.0;
            for s in 0..k - 1 {
                let cr = reject_surrogate(scores.positive[s][i], scores.negative[s][i], y);
                state[[i, s + 1]] = state[[i, s]] * cr;
            }
            if k >= 2 {
                let mut d = deltas[k - 2] + w * sigmoid_loss(y * scores.terminal[i]);
                cost_to_go[[i, k - 2]] = d;
                for s in (0..k - 2).rev() {
                    let a = sigmoid_loss(y * scores.positive[s + 1][i]);
                    let b = sigmoid_loss(y * scores.negative[s + 1][i]);
                    d = deltas[s] + w * a * b + d * reject_from_losses(a, b);
                    cost_to_go[[i, s]] = d;
                }
            }
        }
        Self { state, cost_to_go }
    }

    pub fn compute(model: &MultiStageModel, data: &StagedDataset, penalty: ErrorPenalty) -> Self {
        Self::from_scores(
            &ScoreTable::compute(model, data),
            data.labels(),
            &model.layout().deltas(),
            penalty,
        )
    }
}

/// Soft state matrix `S` under balanced penalties.
pub fn compute_state(model: &MultiStageModel, data: &StagedDataset) -> Array2<f64> {
    SurrogateState::compute(model, data, ErrorPenalty::BALANCED).state
}

/// Soft cost-to-go matrix `D` under balanced penalties, using the model's stage costs.
pub fn compute_cost_to_go(model: &MultiStageModel, data: &StagedDataset) -> Array2<f64> {
    SurrogateState::compute(model, data, ErrorPenalty::BALANCED).cost_to_go
}

/// Mean over examples of `Σ_k S_k R_k` from a precomputed score table.
pub fn risk_from_scores(
    scores: &ScoreTable,
    labels: &[i8],
    deltas: &[f64],
    penalty: ErrorPenalty,
) -> f64 {
    let n = scores.len();
    let k = scores.num_stages();
    assert_eq!(deltas.len() + 1, k, "one cost per reject stage");
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate().take(n) {
        let y = f64::from(label);
        let w = penalty.for_label(y);
        let mut active = 1.0;
        let mut r = 0.0;
        for (s, &delta) in deltas.iter().enumerate() {
            let a = sigmoid_loss(y * scores.positive[s][i]);
            let b = sigmoid_loss(y * scores.negative[s][i]);
            let cr = reject_from_losses(a, b);
            r += active * (w * a * b + delta * cr);
            active *= cr;
        }
        r += active * w * sigmoid_loss(y * scores.terminal[i]);
        total += r;
    }
    total / n as f64
}

/// Global surrogate risk under balanced penalties.
pub fn global_surrogate_risk(model: &MultiStageModel, data: &StagedDataset) -> f64 {
    global_surrogate_risk_with(model, data, ErrorPenalty::BALANCED)
}

pub fn global_surrogate_risk_with(
    model: &MultiStageModel,
    data: &StagedDataset,
    penalty: ErrorPenalty,
) -> f64 {
    risk_from_scores(
        &ScoreTable::compute(model, data),
        data.labels(),
        &model.layout().deltas(),
        penalty,
    )
}

/// The stage-`k` part of the risk with `S` and `D` held fixed:
/// `mean_i S[i][k] (w C(y fp) C(y fn) + D[i][k] C_r)`.
///
/// For reject stages this differs from the global risk by a term that does not
/// depend on the stage-`k` scorers.
pub fn stage_objective(
    k: usize,
    positive: &[f64],
    negative: &[f64],
    labels: &[i8],
    state: &SurrogateState,
    penalty: ErrorPenalty,
) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate().take(n) {
        let y = f64::from(label);
        let a = sigmoid_loss(y * positive[i]);
        let b = sigmoid_loss(y * negative[i]);
        total += state.state[[i, k]]
            * (penalty.for_label(y) * a * b + state.cost_to_go[[i, k]] * reject_from_losses(a, b));
    }
    total / n as f64
}

/// The terminal part of the risk with `S` held fixed: `mean_i S[i][K-1] w C(y f)`.
pub fn terminal_objective(
    terminal: &[f64],
    labels: &[i8],
    state: &SurrogateState,
    penalty: ErrorPenalty,
) -> f64 {
    let last = state.state.ncols() - 1;
    let n = labels.len();
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate().take(n) {
        let y = f64::from(label);
        total += state.state[[i, last]] * penalty.for_label(y) * sigmoid_loss(y * terminal[i]);
    }
    total / n as f64
}
