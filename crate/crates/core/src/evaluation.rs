//! Experiment harness: exact test-set evaluation, Monte-Carlo sweeps over
//! stage costs or baseline thresholds, penalty-ratio ROC families, and the
//! three-stage usage map.
//!
//! Trials and grid points run in parallel; results are always assembled in
//! `(trial, grid)` index order, so output does not depend on scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{myopic_predict, train_per_stage, utility_predict, PerStageClassifiers, UtilityModel};
use crate::boosting::{fit_weighted, BoostConfig, Loss};
use crate::data::split;
use crate::error::{Error, Result};
use crate::model::{sign, AdditiveScorer, MultiStageModel, Prediction, StagedDataset};
use crate::seed::{self, Purpose};
use crate::surrogate::ErrorPenalty;
use crate::trainer::{train, TrainConfig};

/// Anything that routes a feature row through a cascade.
pub trait CascadePolicy: Sync {
    fn num_stages(&self) -> usize;
    /// Cost of entering stage `k`.
    fn stage_cost(&self, k: usize) -> f64;
    fn predict(&self, x: &[f64]) -> Result<Prediction>;
}

impl CascadePolicy for MultiStageModel {
    fn num_stages(&self) -> usize {
        MultiStageModel::num_stages(self)
    }

    fn stage_cost(&self, k: usize) -> f64 {
        self.layout().cost(k)
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        MultiStageModel::predict(self, x)
    }
}

pub struct MyopicPolicy<'a> {
    pub classifiers: &'a PerStageClassifiers,
    pub thresholds: Vec<f64>,
}

impl CascadePolicy for MyopicPolicy<'_> {
    fn num_stages(&self) -> usize {
        self.classifiers.num_stages()
    }

    fn stage_cost(&self, k: usize) -> f64 {
        self.classifiers.layout.cost(k)
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        myopic_predict(self.classifiers, &self.thresholds, x)
    }
}

pub struct UtilityPolicy<'a> {
    pub model: &'a UtilityModel,
    pub thresholds: Vec<f64>,
}

impl CascadePolicy for UtilityPolicy<'_> {
    fn num_stages(&self) -> usize {
        self.model.classifiers.num_stages()
    }

    fn stage_cost(&self, k: usize) -> f64 {
        self.model.classifiers.layout.cost(k)
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        utility_predict(self.model, &self.thresholds, x)
    }
}

/// Test-set operating point of one policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Stage costs or thresholds that produced the point.
    pub params: Vec<f64>,
    /// `reject_rates[k]`: fraction of examples that enter stage `k + 1`.
    pub reject_rates: Vec<f64>,
    pub error: f64,
    pub avg_cost: f64,
}

/// Binary confusion counts, positives being label `+1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn true_positive_rate(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn false_positive_rate(&self) -> f64 {
        ratio(self.false_positive, self.false_positive + self.true_negative)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Exact counts over every test row.
pub fn evaluate(policy: &dyn CascadePolicy, test: &StagedDataset) -> Result<CurvePoint> {
    evaluate_detailed(policy, test).map(|(p, _)| p)
}

pub fn evaluate_detailed(policy: &dyn CascadePolicy, test: &StagedDataset) -> Result<(CurvePoint, Confusion)> {
    if test.is_empty() {
        return Err(Error::input("test set is empty"));
    }
    let k = policy.num_stages();
    let mut entered = vec![0usize; k.saturating_sub(1)];
    let mut errors = 0usize;
    let mut confusion = Confusion::default();
    for (x, &y) in test.rows().zip(test.labels()) {
        let p = policy.predict(x)?;
        for e in entered.iter_mut().take(p.stop_stage) {
            *e += 1;
        }
        match (p.label > 0.0, y == 1) {
            (true, true) => confusion.true_positive += 1,
            (true, false) => confusion.false_positive += 1,
            (false, false) => confusion.true_negative += 1,
            (false, true) => confusion.false_negative += 1,
        }
        if p.label != f64::from(y) {
            errors += 1;
        }
    }
    let n = test.len() as f64;
    // From counts, so the result does not depend on row order.
    let cost: f64 = entered
        .iter()
        .enumerate()
        .map(|(k, &e)| e as f64 * policy.stage_cost(k + 1))
        .sum();
    Ok((
        CurvePoint {
            params: Vec::new(),
            reject_rates: entered.iter().map(|&e| e as f64 / n).collect(),
            error: errors as f64 / n,
            avg_cost: cost / n,
        },
        confusion,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Global,
    Myopic,
    Utility,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Global => "global",
            Method::Myopic => "myopic",
            Method::Utility => "utility",
        }
    }
}

/// Controlled parameter of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    /// Explicit stage costs (global) or thresholds (baselines), one vector of
    /// length `K - 1` per grid point.
    Values(Vec<Vec<f64>>),
    /// Baselines only: target reject fractions. Per trial and stage, the
    /// threshold is the training-set quantile of the rejection statistic that
    /// rejects that fraction.
    Quantiles(Vec<f64>),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Values(v) => v.len(),
            Grid::Quantiles(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub trials: usize,
    pub seed: u64,
    /// Fraction of rows used for training in each trial.
    pub train_fraction: f64,
    pub stratified: bool,
    /// Boosting settings of the global trainer's subproblems.
    pub boost: BoostConfig,
    /// Boosting settings of the baselines' per-stage classifiers.
    pub baseline_boost: BoostConfig,
    pub outer_loops: usize,
    pub penalty: ErrorPenalty,
    /// Equal-width bins per prefix coordinate of the utility conditional model.
    pub utility_bins: usize,
    /// Largest next-stage alphabet the utility policy accepts.
    pub utility_max_alphabet: usize,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            trials: 50,
            seed: 0,
            train_fraction: 0.5,
            stratified: true,
            boost: BoostConfig::default(),
            baseline_boost: BoostConfig {
                loss: Loss::Exponential,
                ..BoostConfig::default()
            },
            outer_loops: 10,
            penalty: ErrorPenalty::BALANCED,
            utility_bins: 20,
            utility_max_alphabet: 50,
            jobs: None,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("at least one trial is required"));
        }
        self.boost.validate()?;
        self.baseline_boost.validate()
    }

    fn train_config(&self, deltas: Vec<f64>, penalty: ErrorPenalty) -> TrainConfig {
        TrainConfig {
            boost: self.boost,
            outer_loops: self.outer_loops,
            deltas,
            penalty,
        }
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::input(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }

    /// Train/test split of trial `t`.
    pub fn split(&self, data: &StagedDataset, trial: usize) -> Result<(StagedDataset, StagedDataset)> {
        let mut rng = seed::rng(self.seed, trial as u64, Purpose::Split);
        split(data, self.train_fraction, self.stratified, &mut rng)
    }
}

/// Mean over trials with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr }
    }
}

/// Grid point averaged over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedPoint {
    pub params: Vec<f64>,
    pub reject_rates: Vec<Estimate>,
    pub error: Estimate,
    pub avg_cost: Estimate,
    pub trials: usize,
}

impl AveragedPoint {
    fn from_trials(params: Vec<f64>, points: &[&CurvePoint]) -> Self {
        let stages = points[0].reject_rates.len();
        let collect = |f: &dyn Fn(&CurvePoint) -> f64| Estimate::of(&points.iter().map(|p| f(p)).collect::<Vec<_>>());
        Self {
            params,
            reject_rates: (0..stages).map(|k| collect(&|p| p.reject_rates[k])).collect(),
            error: collect(&|p| p.error),
            avg_cost: collect(&|p| p.avg_cost),
            trials: points.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: Method,
    pub points: Vec<AveragedPoint>,
    /// `per_trial[t][g]`: the point of grid entry `g` in trial `t`.
    pub per_trial: Vec<Vec<CurvePoint>>,
}

fn check_params(values: &[Vec<f64>], stages: usize, what: &str) -> Result<()> {
    if let Some(v) = values.iter().find(|v| v.len() + 1 != stages) {
        return Err(Error::input(format!(
            "{stages} stages need {} {what} per grid point, got {}",
            stages - 1,
            v.len()
        )));
    }
    Ok(())
}

/// Threshold that makes a `≤ t` rule reject a `level` fraction of `values`.
fn lower_quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let count = (level.clamp(0.0, 1.0) * values.len() as f64).ceil() as usize;
    if count == 0 {
        0.0
    } else {
        values[count - 1]
    }
}

/// Threshold that makes a `≥ t` rule reject a `level` fraction of `values`.
fn upper_quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let count = (level.clamp(0.0, 1.0) * values.len() as f64).ceil() as usize;
    if count == 0 {
        f64::INFINITY
    } else {
        values[values.len() - count]
    }
}

/// Runs `method` over `grid` for `cfg.trials` random splits of `data`.
pub fn sweep(data: &StagedDataset, method: Method, grid: &Grid, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::input("the sweep grid is empty"));
    }
    let stages = data.layout().num_stages();
    if stages < 2 {
        return Err(Error::input("sweeps need at least two stages"));
    }
    let splits = (0..cfg.trials)
        .map(|t| cfg.split(data, t))
        .collect::<Result<Vec<_>>>()?;

    let per_trial: Vec<Vec<CurvePoint>> = match (method, grid) {
        (Method::Global, Grid::Values(values)) => {
            check_params(values, stages, "stage costs")?;
            let tasks: Vec<(usize, usize)> = (0..cfg.trials)
                .flat_map(|t| (0..values.len()).map(move |g| (t, g)))
                .collect();
            let flat = cfg.run(|| {
                tasks
                    .par_iter()
                    .map(|&(t, g)| {
                        let (train_set, test_set) = &splits[t];
                        let out = train(train_set, &cfg.train_config(values[g].clone(), cfg.penalty))?;
                        let mut point = evaluate(&out.model, test_set)?;
                        point.params = values[g].clone();
                        Ok(point)
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            flat.chunks(values.len()).map(<[CurvePoint]>::to_vec).collect()
        }
        (Method::Global, Grid::Quantiles(_)) => {
            return Err(Error::input("the global method needs an explicit stage-cost grid"))
        }
        (Method::Myopic | Method::Utility, _) => {
            if let Grid::Values(values) = grid {
                check_params(values, stages, "thresholds")?;
            }
            cfg.run(|| {
                splits
                    .par_iter()
                    .map(|(train_set, test_set)| baseline_trial(method, grid, train_set, test_set, cfg))
                    .collect::<Result<Vec<_>>>()
            })??
        }
    };

    let points = (0..grid.len())
        .map(|g| {
            let column: Vec<&CurvePoint> = per_trial.iter().map(|row| &row[g]).collect();
            let params = match grid {
                Grid::Values(v) => v[g].clone(),
                Grid::Quantiles(q) => vec![q[g]],
            };
            AveragedPoint::from_trials(params, &column)
        })
        .collect();
    Ok(SweepResult {
        method,
        points,
        per_trial,
    })
}

fn baseline_trial(
    method: Method,
    grid: &Grid,
    train_set: &StagedDataset,
    test_set: &StagedDataset,
    cfg: &SweepConfig,
) -> Result<Vec<CurvePoint>> {
    let classifiers = train_per_stage(train_set, &cfg.baseline_boost)?;
    let reject_stages = classifiers.num_stages() - 1;
    match method {
        Method::Myopic => {
            let margins: Vec<Vec<f64>> = (0..reject_stages)
                .map(|k| train_set.rows().map(|x| classifiers.scorers[k].score(x).abs()).collect())
                .collect();
            thresholds_for(grid, &margins, lower_quantile)
                .into_iter()
                .map(|thresholds| {
                    let policy = MyopicPolicy {
                        classifiers: &classifiers,
                        thresholds: thresholds.clone(),
                    };
                    let mut p = evaluate(&policy, test_set)?;
                    p.params = thresholds;
                    Ok(p)
                })
                .collect()
        }
        Method::Utility => {
            let model = UtilityModel::fit(classifiers, train_set, cfg.utility_bins, cfg.utility_max_alphabet)?;
            let utilities: Vec<Vec<f64>> = (0..reject_stages)
                .map(|k| train_set.rows().map(|x| model.utility(k, x)).collect())
                .collect();
            thresholds_for(grid, &utilities, upper_quantile)
                .into_iter()
                .map(|thresholds| {
                    let policy = UtilityPolicy {
                        model: &model,
                        thresholds: thresholds.clone(),
                    };
                    let mut p = evaluate(&policy, test_set)?;
                    p.params = thresholds;
                    Ok(p)
                })
                .collect()
        }
        Method::Global => unreachable!("global sweeps train one model per grid point"),
    }
}

fn thresholds_for(grid: &Grid, statistics: &[Vec<f64>], quantile: fn(&mut [f64], f64) -> f64) -> Vec<Vec<f64>> {
    match grid {
        Grid::Values(v) => v.clone(),
        Grid::Quantiles(levels) => levels
            .iter()
            .map(|&q| statistics.iter().map(|s| quantile(&mut s.clone(), q)).collect())
            .collect(),
    }
}

/// Linear interpolation of error at a given reject rate along a curve of
/// `(reject_rate, error)` points. Points sharing a reject rate are averaged.
/// `None` outside the covered range.
pub fn error_at_reject_rate(curve: &[(f64, f64)], rate: f64) -> Option<f64> {
    let mut sorted = curve.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, usize)> = Vec::new();
    for (r, e) in sorted {
        match merged.last_mut() {
            Some(last) if last.0 == r => {
                last.1 += e;
                last.2 += 1;
            }
            _ => merged.push((r, e, 1)),
        }
    }
    let merged: Vec<(f64, f64)> = merged.into_iter().map(|(r, e, c)| (r, e / c as f64)).collect();
    let first = merged.first()?;
    if rate < first.0 || rate > merged.last()?.0 {
        return None;
    }
    for w in merged.windows(2) {
        let ((r0, e0), (r1, e1)) = (w[0], w[1]);
        if rate <= r1 {
            return Some(e0 + (e1 - e0) * (rate - r0) / (r1 - r0));
        }
    }
    Some(first.1)
}

/// Test error per trial of a single classifier boosted with `cfg.boost` on
/// every coordinate, the full-cost reference of a sweep.
pub fn centralized_errors(data: &StagedDataset, cfg: &SweepConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let last = data.layout().num_stages() - 1;
    cfg.run(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let (train_set, test_set) = cfg.split(data, t)?;
                let scorer = fit_weighted(
                    &train_set,
                    last,
                    &vec![1.0; train_set.len()],
                    train_set.labels(),
                    &AdditiveScorer::constant(last, 0.0),
                    &cfg.boost,
                )?;
                let wrong = test_set
                    .rows()
                    .zip(test_set.labels())
                    .filter(|(x, &y)| sign(scorer.score(x)) != f64::from(y))
                    .count();
                Ok(wrong as f64 / test_set.len() as f64)
            })
            .collect()
    })?
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `w_pos / w_neg`.
    pub ratio: f64,
    pub false_positive_rate: Estimate,
    pub true_positive_rate: Estimate,
    /// Fraction of examples rejected at the first stage.
    pub reject_rate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub deltas: Vec<f64>,
    pub points: Vec<RocPoint>,
    /// Mean first-stage reject rate across the curve, its label.
    pub avg_reject_rate: f64,
}

/// One model per penalty ratio at fixed stage costs; test-set ROC points
/// averaged over trials.
pub fn roc_sweep(data: &StagedDataset, deltas: &[f64], ratios: &[f64], cfg: &SweepConfig) -> Result<RocCurve> {
    cfg.validate()?;
    if ratios.is_empty() || ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::input("penalty ratios must be finite and > 0"));
    }
    check_params(&[deltas.to_vec()], data.layout().num_stages(), "stage costs")?;
    let splits = (0..cfg.trials)
        .map(|t| cfg.split(data, t))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.trials)
        .flat_map(|t| (0..ratios.len()).map(move |r| (t, r)))
        .collect();
    let flat = cfg.run(|| {
        tasks
            .par_iter()
            .map(|&(t, r)| {
                let (train_set, test_set) = &splits[t];
                let out = train(
                    train_set,
                    &cfg.train_config(deltas.to_vec(), ErrorPenalty::from_ratio(ratios[r])),
                )?;
                evaluate_detailed(&out.model, test_set)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let points: Vec<RocPoint> = (0..ratios.len())
        .map(|r| {
            let runs: Vec<&(CurvePoint, Confusion)> = (0..cfg.trials).map(|t| &flat[t * ratios.len() + r]).collect();
            let est = |f: &dyn Fn(&(CurvePoint, Confusion)) -> f64| {
                Estimate::of(&runs.iter().map(|v| f(v)).collect::<Vec<_>>())
            };
            RocPoint {
                ratio: ratios[r],
                false_positive_rate: est(&|(_, c)| c.false_positive_rate()),
                true_positive_rate: est(&|(_, c)| c.true_positive_rate()),
                reject_rate: est(&|(p, _)| p.reject_rates[0]),
            }
        })
        .collect();
    let avg_reject_rate = points.iter().map(|p| p.reject_rate.mean).sum::<f64>() / points.len() as f64;
    Ok(RocCurve {
        deltas: deltas.to_vec(),
        points,
        avg_reject_rate,
    })
}

/// Area under the ROC polyline through `(0, 0)`, the points, and `(1, 1)`.
pub fn roc_auc(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageMapPoint {
    pub delta2: f64,
    pub delta3: f64,
    /// Fraction classified at the second stage.
    pub frac_stage2_only: f64,
    /// Fraction that reaches the third stage.
    pub frac_stage3: f64,
    pub error: f64,
}

/// Three-stage usage map: one trained model per `(δ2, δ3)` pair, fractions
/// and error averaged over trials.
pub fn stage_map(
    data: &StagedDataset,
    delta2_grid: &[f64],
    delta3_grid: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<StageMapPoint>> {
    if data.layout().num_stages() != 3 {
        return Err(Error::input("the stage map needs a three-stage layout"));
    }
    let values: Vec<Vec<f64>> = delta2_grid
        .iter()
        .flat_map(|&a| delta3_grid.iter().map(move |&b| vec![a, b]))
        .collect();
    let result = sweep(data, Method::Global, &Grid::Values(values), cfg)?;
    Ok(result
        .points
        .iter()
        .map(|p| {
            let (r2, r3) = (p.reject_rates[0].mean, p.reject_rates[1].mean);
            StageMapPoint {
                delta2: p.params[0],
                delta3: p.params[1],
                frac_stage2_only: r2 - r3,
                frac_stage3: r3,
                error: p.error.mean,
            }
        })
        .collect())
}

/// Curve CSV: `method, <param names>, reject_rate_1.., reject_stderr_1..,
/// error, stderr, avg_cost, trials`; `reject_rate_k` is the fraction entering
/// stage `k + 1`.
pub fn write_curve_csv<W: Write>(out: W, method: &str, param_names: &[String], points: &[AveragedPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let stages = points.first().map_or(0, |p| p.reject_rates.len());
    let mut header = vec!["method".to_string()];
    header.extend(param_names.iter().cloned());
    header.extend((1..=stages).map(|k| format!("reject_rate_{k}")));
    header.extend((1..=stages).map(|k| format!("reject_stderr_{k}")));
    header.extend(["error", "stderr", "avg_cost", "trials"].map(String::from));
    w.write_record(&header)?;
    for p in points {
        if p.params.len() != param_names.len() {
            return Err(Error::structure("parameter names do not match the grid"));
        }
        let mut row = vec![method.to_string()];
        row.extend(p.params.iter().map(f64::to_string));
        row.extend(p.reject_rates.iter().map(|r| r.mean.to_string()));
        row.extend(p.reject_rates.iter().map(|r| r.stderr.to_string()));
        row.extend([p.error.mean, p.error.stderr, p.avg_cost.mean].map(|v| v.to_string()));
        row.push(p.trials.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// ROC CSV: `ratio, fpr, fpr_stderr, tpr, tpr_stderr, reject_rate, reject_stderr`.
pub fn write_roc_csv<W: Write>(out: W, curve: &RocCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ratio", "fpr", "fpr_stderr", "tpr", "tpr_stderr", "reject_rate", "reject_stderr"])?;
    for p in &curve.points {
        w.write_record(
            [
                p.ratio,
                p.false_positive_rate.mean,
                p.false_positive_rate.stderr,
                p.true_positive_rate.mean,
                p.true_positive_rate.stderr,
                p.reject_rate.mean,
                p.reject_rate.stderr,
            ]
            .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Stage-map CSV: `delta2, delta3, frac_stage2_only, frac_stage3, error`.
pub fn write_stage_map_csv<W: Write>(out: W, points: &[StageMapPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta2", "delta3", "frac_stage2_only", "frac_stage3", "error"])?;
    for p in points {
        w.write_record([p.delta2, p.delta3, p.frac_stage2_only, p.frac_stage3, p.error].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
