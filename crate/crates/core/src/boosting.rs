//! Weighted sigmoid-loss boosting over decision stumps.
//!
//! Each round picks the stump most correlated with the negative functional
//! gradient of `Σ w_i C(y_i f(x_i))`, then a non-negative step that minimizes
//! the regularized objective `exp(λ q) Σ w_i C(y_i (f + q h)(x_i))`. Boosting
//! stops early once the best edge, relative to the current loss, no longer
//! exceeds `λ`: no stump is then a descent direction of the regularized
//! objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AdditiveScorer, StagedDataset, Stump};
use crate::surrogate::{sigmoid_loss, sigmoid_slope};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Maximum boosting rounds per call.
    pub iterations: usize,
    /// Regularization strength of the `exp(λ Σ|q|)` multiplier.
    pub lambda: f64,
    /// Upper end of the step-size search interval.
    pub step_max: f64,
    /// Width at which the golden-section search stops.
    pub line_search_tol: f64,
    #[serde(default)]
    pub loss: Loss,
}

/// Per-example margin loss `ℓ(y f)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `1 / (1 + e^z)`, used by every stage subproblem.
    #[default]
    Sigmoid,
    /// `e^{-z}`, used for the stand-alone per-stage classifiers.
    Exponential,
}

impl Loss {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Loss::Sigmoid => sigmoid_loss(z),
            Loss::Exponential => (-z).exp(),
        }
    }

    /// `-ℓ'(z)`.
    #[inline]
    pub fn slope(self, z: f64) -> f64 {
        match self {
            Loss::Sigmoid => sigmoid_slope(z),
            Loss::Exponential => (-z).exp(),
        }
    }
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            lambda: 0.0,
            step_max: 10.0,
            line_search_tol: 1e-4,
            loss: Loss::Sigmoid,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::input(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.step_max.is_finite() && self.step_max > 0.0) {
            return Err(Error::input(format!(
                "step_max must be > 0, got {}",
                self.step_max
            )));
        }
        if !(self.line_search_tol.is_finite() && self.line_search_tol > 0.0) {
            return Err(Error::input(format!(
                "line_search_tol must be > 0, got {}",
                self.line_search_tol
            )));
        }
        Ok(())
    }
}

/// Candidate thresholds for one coordinate: the row order sorted by value and,
/// for each midpoint between consecutive distinct values, how many rows fall
/// below it.
#[derive(Clone, Debug)]
struct CoordinateIndex {
    dimension: usize,
    order: Vec<u32>,
    cuts: Vec<(usize, f64)>,
}

/// Exhaustive stump search over a fixed set of coordinates.
///
/// Candidates per coordinate are `-inf`, every midpoint between consecutive
/// distinct values, and `+inf`, each with both polarities. Ties go to the
/// lowest coordinate, then the lowest threshold, then polarity `+1`.
#[derive(Clone, Debug)]
pub struct StumpSearch {
    coords: Vec<CoordinateIndex>,
}

impl StumpSearch {
    pub fn new(data: &StagedDataset, coordinates: &[usize]) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::input("stump search needs at least one coordinate"));
        }
        let mut coordinates = coordinates.to_vec();
        coordinates.sort_unstable();
        coordinates.dedup();
        let n = data.len();
        let coords = coordinates
            .into_iter()
            .map(|dimension| {
                if dimension >= data.dim() {
                    return Err(Error::structure(format!(
                        "coordinate {dimension} out of range for {} columns",
                        data.dim()
                    )));
                }
                let value = |i: u32| data.row(i as usize)[dimension];
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
                let mut cuts = Vec::new();
                for j in 1..n {
                    let lo = value(order[j - 1]);
                    let hi = value(order[j]);
                    if lo < hi {
                        cuts.push((j, lo + (hi - lo) / 2.0));
                    }
                }
                Ok(CoordinateIndex {
                    dimension,
                    order,
                    cuts,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }

    /// Stump maximizing `Σ_i targets_i h(x_i)`, with its edge.
    pub fn best(&self, targets: &[f64]) -> (Stump, f64) {
        let total: f64 = targets.iter().sum();
        let mut best = (Stump::new(self.coords[0].dimension, f64::NEG_INFINITY, 1), f64::NEG_INFINITY);
        let mut consider = |dimension: usize, threshold: f64, edge_plus: f64| {
            if edge_plus > best.1 {
                best = (Stump::new(dimension, threshold, 1), edge_plus);
            }
            if -edge_plus > best.1 {
                best = (Stump::new(dimension, threshold, -1), -edge_plus);
            }
        };
        for c in &self.coords {
            consider(c.dimension, f64::NEG_INFINITY, total);
            let mut below = 0.0;
            let mut next = 0;
            for &(count, threshold) in &c.cuts {
                while next < count {
                    below += targets[c.order[next] as usize];
                    next += 1;
                }
                consider(c.dimension, threshold, total - 2.0 * below);
            }
            consider(c.dimension, f64::INFINITY, -total);
        }
        best
    }
}

/// Best stump over the coordinates in `prefix` for the given signed targets.
pub fn best_stump(data: &StagedDataset, prefix: &[usize], targets: &[f64]) -> Result<(Stump, f64)> {
    if targets.len() != data.len() {
        return Err(Error::structure(format!(
            "{} targets for {} rows",
            targets.len(),
            data.len()
        )));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::input("stump targets must be finite"));
    }
    Ok(StumpSearch::new(data, prefix)?.best(targets))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// All rounds used.
    Exhausted,
    /// Best edge ratio did not exceed λ.
    NoDescentDirection,
    /// The line search found no step that lowers the objective.
    NoImprovement,
    /// All weights were zero.
    ZeroWeights,
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub scorer: AdditiveScorer,
    /// Regularized objective `exp(λ Σ|q|) Σ w C(y f)`, before the first round
    /// and after each accepted round.
    pub objective: Vec<f64>,
    pub stop: StopReason,
}

/// Boosts `init` on the stage-`stage` coordinates to reduce
/// `Σ_i weights_i C(labels_i f(x_i))`.
pub fn fit_weighted(
    data: &StagedDataset,
    stage: usize,
    weights: &[f64],
    labels: &[i8],
    init: &AdditiveScorer,
    cfg: &BoostConfig,
) -> Result<AdditiveScorer> {
    fit_weighted_report(data, stage, weights, labels, init, cfg).map(|r| r.scorer)
}

pub fn fit_weighted_report(
    data: &StagedDataset,
    stage: usize,
    weights: &[f64],
    labels: &[i8],
    init: &AdditiveScorer,
    cfg: &BoostConfig,
) -> Result<FitReport> {
    let search = StumpSearch::new(data, data.layout().prefix(stage))?;
    fit_with_search(&search, data, stage, weights, labels, init, cfg)
}

pub(crate) fn fit_with_search(
    search: &StumpSearch,
    data: &StagedDataset,
    stage: usize,
    weights: &[f64],
    labels: &[i8],
    init: &AdditiveScorer,
    cfg: &BoostConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let n = data.len();
    if weights.len() != n || labels.len() != n {
        return Err(Error::structure(format!(
            "{} weights and {} labels for {n} rows",
            weights.len(),
            labels.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::input(format!("weights must be finite and >= 0, got {w}")));
    }
    if init.stage != stage {
        return Err(Error::structure(format!(
            "initial scorer is for stage {}, fitting stage {stage}",
            init.stage
        )));
    }
    init.validate(data.layout())?;

    let mut scorer = init.clone();
    let mut scores = scorer.scores(data);
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let loss = |scores: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            total += weights[i] * cfg.loss.value(y[i] * scores[i]);
        }
        total
    };

    let mut current = loss(&scores);
    let mut reg = (cfg.lambda * scorer.total_weight()).exp();
    let mut objective = vec![reg * current];
    if weights.iter().all(|&w| w == 0.0) {
        return Ok(FitReport {
            scorer,
            objective,
            stop: StopReason::ZeroWeights,
        });
    }

    let mut pull = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut stop = StopReason::Exhausted;
    for _ in 0..cfg.iterations {
        for i in 0..n {
            pull[i] = weights[i] * cfg.loss.slope(y[i] * scores[i]) * y[i];
        }
        let (stump, edge) = search.best(&pull);
        if current.is_nan() || current <= 0.0 || edge / current <= cfg.lambda {
            stop = StopReason::NoDescentDirection;
            break;
        }
        for (i, x) in data.rows().enumerate() {
            h[i] = stump.predict(x);
        }
        let mut phi = |q: f64| -> f64 {
            for i in 0..n {
                trial[i] = scores[i] + q * h[i];
            }
            (cfg.lambda * q).exp() * loss(&trial)
        };
        let (step, value) = golden_section(&mut phi, 0.0, cfg.step_max, cfg.line_search_tol);
        if !(step > 0.0 && value < current) {
            stop = StopReason::NoImprovement;
            break;
        }
        scorer.push(stump, step);
        for i in 0..n {
            scores[i] += step * h[i];
        }
        current = loss(&scores);
        reg = (cfg.lambda * scorer.total_weight()).exp();
        objective.push(reg * current);
    }
    Ok(FitReport {
        scorer,
        objective,
        stop,
    })
}

/// Golden-section search for a minimizer of `f` on `[lo, hi]`. Returns the
/// best point evaluated and its value.
fn golden_section(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StageLayout;
    use ndarray::array;

    fn one_dim(xs: &[f64], labels: Vec<i8>) -> StagedDataset {
        let x = ndarray::Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap();
        let layout = StageLayout::contiguous(&[1], &[]).unwrap();
        StagedDataset::new(x, labels, layout).unwrap()
    }

    #[test]
    fn separable_pair() {
        let data = one_dim(&[1.0, 2.0], vec![1, 1]);
        let (stump, edge) = best_stump(&data, &[0], &[-1.0, 1.0]).unwrap();
        assert_eq!(stump, Stump::new(0, 1.5, 1));
        assert_eq!(edge, 2.0);
    }

    #[test]
    fn zero_targets_pick_the_minimal_stump() {
        let x = array![[1.0, 5.0], [2.0, 4.0]];
        let layout = StageLayout::contiguous(&[2], &[]).unwrap();
        let data = StagedDataset::new(x, vec![1, -1], layout).unwrap();
        let (stump, edge) = best_stump(&data, &[1, 0], &[0.0, 0.0]).unwrap();
        assert_eq!(stump, Stump::new(0, f64::NEG_INFINITY, 1));
        assert_eq!(edge, 0.0);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) = golden_section(&mut |q| (q - 2.5) * (q - 2.5) + 1.0, 0.0, 10.0, 1e-6);
        assert!((x - 2.5).abs() < 1e-5);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_weights_return_init() {
        let data = one_dim(&[1.0, 2.0, 3.0], vec![1, -1, 1]);
        let init = AdditiveScorer::constant(0, 0.3);
        let r = fit_weighted_report(&data, 0, &[0.0; 3], data.labels(), &init, &BoostConfig::default())
            .unwrap();
        assert_eq!(r.scorer, init);
        assert_eq!(r.stop, StopReason::ZeroWeights);
    }

    #[test]
    fn rejects_bad_weights() {
        let data = one_dim(&[1.0, 2.0], vec![1, -1]);
        let init = AdditiveScorer::constant(0, 0.0);
        let cfg = BoostConfig::default();
        assert!(matches!(
            fit_weighted(&data, 0, &[1.0, f64::NAN], data.labels(), &init, &cfg),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            fit_weighted(&data, 0, &[1.0, -1.0], data.labels(), &init, &cfg),
            Err(Error::Input(_))
        ));
    }
}
