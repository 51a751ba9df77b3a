use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StagedDataset;
use crate::seed::{self, Purpose};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// One Gaussian component of a class-conditional density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major covariance matrix.
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMixture {
    pub prior: f64,
    pub components: Vec<Component>,
}

/// Binary Gaussian-mixture distribution whose coordinates are revealed in
/// order, stage by stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixtureSpec {
    pub positive: ClassMixture,
    pub negative: ClassMixture,
}

fn component(weight: f64, mean: &[f64], sd: &[f64]) -> Component {
    let d = mean.len();
    Component {
        weight,
        mean: mean.to_vec(),
        covariance: (0..d)
            .map(|i| (0..d).map(|j| if i == j { sd[i] * sd[i] } else { 0.0 }).collect())
            .collect(),
    }
}

/// Component weight, mean and Cholesky factor of the covariance.
type Factor = (f64, DVector<f64>, DMatrix<f64>);

impl GaussianMixtureSpec {
    /// Two-dimensional benchmark in which class information is split between
    /// the coordinates.
    ///
    /// Three regions along `x1`:
    /// - far out (`x1` near `4` or `-5`), one class only, so `x1` decides;
    /// - `x1` near `-2`, both classes, separated cleanly by the sign of `x2`;
    /// - `x1` near `1`, both classes, separated only partly by `x2`.
    pub fn standard() -> Self {
        let side = |sign: f64| ClassMixture {
            prior: 0.5,
            components: vec![
                component(0.20, &[if sign > 0.0 { 4.0 } else { -5.0 }, 0.0], &[0.8, 1.0]),
                component(0.35, &[-2.0, 2.0 * sign], &[0.8, 0.7]),
                component(0.45, &[1.0, sign], &[0.8, 1.0]),
            ],
        };
        GaussianMixtureSpec {
            positive: side(1.0),
            negative: side(-1.0),
        }
    }

    /// Three unit-variance coordinates, independent given the class, one per
    /// stage. The class means are `±(0.4, 0.6, 3.0)`, so the first two stages
    /// are weak and the third is nearly decisive.
    pub fn three_stage() -> Self {
        let side = |sign: f64| ClassMixture {
            prior: 0.5,
            components: vec![component(1.0, &[0.4 * sign, 0.6 * sign, 3.0 * sign], &[1.0, 1.0, 1.0])],
        };
        GaussianMixtureSpec {
            positive: side(1.0),
            negative: side(-1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.positive.components.first().map_or(0, |c| c.mean.len())
    }

    /// Checks priors, weights, shapes and positive definiteness.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::input("mixture needs at least one component with a mean"));
        }
        if (self.positive.prior + self.negative.prior - 1.0).abs() > 1e-9
            || self.positive.prior <= 0.0
            || self.negative.prior <= 0.0
        {
            return Err(Error::input("class priors must be positive and sum to 1"));
        }
        for (name, class) in [("positive", &self.positive), ("negative", &self.negative)] {
            if class.components.is_empty() {
                return Err(Error::input(format!("{name} class has no components")));
            }
            let total: f64 = class.components.iter().map(|c| c.weight).sum();
            if (total - 1.0).abs() > 1e-9 || class.components.iter().any(|c| c.weight <= 0.0) {
                return Err(Error::input(format!("{name} component weights must be positive and sum to 1")));
            }
            for (j, c) in class.components.iter().enumerate() {
                if c.mean.len() != d || c.covariance.len() != d || c.covariance.iter().any(|r| r.len() != d) {
                    return Err(Error::input(format!("{name} component {j} is not {d}-dimensional")));
                }
                let m = covariance(c);
                if (&m - m.transpose()).amax() > 1e-12 {
                    return Err(Error::input(format!("{name} component {j} covariance is not symmetric")));
                }
                if m.cholesky().is_none() {
                    return Err(Error::input(format!(
                        "{name} component {j} covariance is not positive definite"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Posterior model over the first `coords` coordinates.
    pub fn marginal(&self, coords: usize) -> Result<Marginal> {
        self.validate()?;
        if coords == 0 || coords > self.dim() {
            return Err(Error::input(format!("prefix length {coords} outside 1..={}", self.dim())));
        }
        Ok(Marginal {
            parts: self.parts(coords).collect::<Result<_>>()?,
        })
    }

    fn parts(&self, coords: usize) -> impl Iterator<Item = Result<Part>> + '_ {
        let sides = [(1i8, &self.positive), (-1i8, &self.negative)];
        sides.into_iter().flat_map(move |(label, class)| {
            class.components.iter().map(move |c| {
                let cov = covariance(c).view((0, 0), (coords, coords)).into_owned();
                let gauss = Gaussian::new(DVector::from_column_slice(&c.mean[..coords]), cov)?;
                Ok(Part {
                    label,
                    log_weight: class.prior.ln() + c.weight.ln(),
                    gauss,
                })
            })
        })
    }

    /// `n` i.i.d. draws: features (row-major, `n × dim`) and labels.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(Vec<f64>, Vec<i8>)> {
        self.validate()?;
        let d = self.dim();
        let factors: Vec<Vec<Factor>> = [&self.positive, &self.negative]
            .iter()
            .map(|class| {
                class
                    .components
                    .iter()
                    .map(|c| {
                        let l = covariance(c).cholesky().expect("validated").l();
                        (c.weight, DVector::from_column_slice(&c.mean), l)
                    })
                    .collect()
            })
            .collect();
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let positive = rng.random::<f64>() < self.positive.prior;
            let comps = &factors[usize::from(!positive)];
            let mut u = rng.random::<f64>();
            let mut pick = comps.len() - 1;
            for (j, (w, _, _)) in comps.iter().enumerate() {
                if u < *w {
                    pick = j;
                    break;
                }
                u -= w;
            }
            let (_, mean, l) = &comps[pick];
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = mean + l * z;
            features.extend(x.iter());
            labels.push(if positive { 1 } else { -1 });
        }
        Ok((features, labels))
    }
}

fn covariance(c: &Component) -> DMatrix<f64> {
    let d = c.covariance.len();
    DMatrix::from_fn(d, d, |i, j| c.covariance[i][j])
}

#[derive(Clone, Debug)]
struct Gaussian {
    mean: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

impl Gaussian {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len() as f64;
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::input("covariance is not positive definite"))?;
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        Ok(Self {
            mean,
            chol,
            log_norm: -0.5 * (d * LN_2PI + log_det),
        })
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        let z = self
            .chol
            .l()
            .solve_lower_triangular(&diff)
            .expect("cholesky factor is nonsingular");
        self.log_norm - 0.5 * z.norm_squared()
    }
}

#[derive(Clone, Debug)]
struct Part {
    label: i8,
    log_weight: f64,
    gauss: Gaussian,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Class posterior given the first few coordinates.
#[derive(Clone, Debug)]
pub struct Marginal {
    parts: Vec<Part>,
}

impl Marginal {
    /// `P(y = +1 | x)`, computed in log space.
    pub fn posterior(&self, x: &[f64]) -> f64 {
        let logs: Vec<(i8, f64)> = self
            .parts
            .iter()
            .map(|p| (p.label, p.log_weight + p.gauss.log_density(x)))
            .collect();
        let pos = log_sum_exp(logs.iter().filter(|(l, _)| *l == 1).map(|(_, v)| *v));
        let neg = log_sum_exp(logs.iter().filter(|(l, _)| *l == -1).map(|(_, v)| *v));
        if pos >= neg {
            1.0 / (1.0 + (neg - pos).exp())
        } else {
            let e = (pos - neg).exp();
            e / (1.0 + e)
        }
    }
}

/// `P(y = +1 | x_prefix)` where `x_prefix` holds the leading coordinates.
pub fn mixture_posterior(spec: &GaussianMixtureSpec, x_prefix: &[f64]) -> Result<f64> {
    Ok(spec.marginal(x_prefix.len())?.posterior(x_prefix))
}

/// Settings of the stage-two Bayes error estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesCurveConfig {
    /// Simpson nodes used when stage two adds a single coordinate.
    pub quadrature_nodes: usize,
    /// Draws per example used when stage two adds several coordinates.
    pub monte_carlo_samples: usize,
    pub seed: u64,
}

impl Default for BayesCurveConfig {
    fn default() -> Self {
        Self {
            quadrature_nodes: 801,
            monte_carlo_samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesCurvePoint {
    pub delta: f64,
    pub reject_rate: f64,
    pub error: f64,
    pub avg_cost: f64,
}

/// Conditional law of the later coordinates given the leading ones, for each
/// mixture component.
struct ConditionalPart {
    label: i8,
    log_weight: f64,
    head: Gaussian,
    /// `Σ21 Σ11^{-1}`.
    gain: DMatrix<f64>,
    head_mean: DVector<f64>,
    tail_mean: DVector<f64>,
    tail: Gaussian,
    tail_factor: DMatrix<f64>,
}

/// Expected Bayes error of the full-feature classifier given the stage-one
/// coordinates.
pub struct StageTwoError {
    parts: Vec<ConditionalPart>,
    head: usize,
    cfg: BayesCurveConfig,
}

impl StageTwoError {
    pub fn new(spec: &GaussianMixtureSpec, head: usize, cfg: BayesCurveConfig) -> Result<Self> {
        spec.validate()?;
        let d = spec.dim();
        if head == 0 || head >= d {
            return Err(Error::input(format!("stage one must reveal 1..{d} coordinates, got {head}")));
        }
        let tail = d - head;
        let mut parts = Vec::new();
        for (label, class) in [(1i8, &spec.positive), (-1i8, &spec.negative)] {
            for c in &class.components {
                let cov = covariance(c);
                let s11 = cov.view((0, 0), (head, head)).into_owned();
                let s21 = cov.view((head, 0), (tail, head)).into_owned();
                let s22 = cov.view((head, head), (tail, tail)).into_owned();
                let inv11 = s11
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::input("singular covariance block"))?;
                let gain = &s21 * inv11;
                let cond = &s22 - &gain * s21.transpose();
                let cond = (&cond + cond.transpose()) * 0.5;
                let mean = DVector::from_column_slice(&c.mean);
                let tail_gauss = Gaussian::new(DVector::zeros(tail), cond.clone())?;
                parts.push(ConditionalPart {
                    label,
                    log_weight: class.prior.ln() + c.weight.ln(),
                    head: Gaussian::new(mean.rows(0, head).into_owned(), s11)?,
                    gain,
                    head_mean: mean.rows(0, head).into_owned(),
                    tail_mean: mean.rows(head, tail).into_owned(),
                    tail_factor: tail_gauss.chol.l(),
                    tail: tail_gauss,
                });
            }
        }
        Ok(Self { parts, head, cfg })
    }

    /// `E[min(P(+1|x), P(-1|x)) | x1]`, by quadrature for one added
    /// coordinate and by seeded Monte-Carlo otherwise. `stream` selects the
    /// Monte-Carlo stream.
    pub fn at(&self, x1: &[f64], stream: u64) -> f64 {
        let logs: Vec<f64> = self
            .parts
            .iter()
            .map(|p| p.log_weight + p.head.log_density(x1))
            .collect();
        let norm = log_sum_exp(logs.iter().copied());
        let weights: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
        let x1v = DVector::from_column_slice(x1);
        let means: Vec<DVector<f64>> = self
            .parts
            .iter()
            .map(|p| &p.tail_mean + &p.gain * (&x1v - &p.head_mean))
            .collect();
        let density = |x2: &[f64]| -> (f64, f64) {
            let mut pos = 0.0;
            let mut neg = 0.0;
            for ((p, w), m) in self.parts.iter().zip(&weights).zip(&means) {
                let diff: Vec<f64> = x2.iter().zip(m.iter()).map(|(a, b)| a - b).collect();
                let v = w * p.tail.log_density(&diff).exp();
                if p.label == 1 {
                    pos += v;
                } else {
                    neg += v;
                }
            }
            (pos, neg)
        };

        if self.parts[0].tail_mean.len() == 1 {
            let (lo, hi) = self
                .parts
                .iter()
                .zip(&means)
                .zip(&weights)
                .filter(|(_, w)| **w > 1e-300)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), ((p, m), _)| {
                    let sd = p.tail_factor[(0, 0)];
                    (lo.min(m[0] - 10.0 * sd), hi.max(m[0] + 10.0 * sd))
                });
            let n = self.cfg.quadrature_nodes.max(3) | 1;
            let h = (hi - lo) / (n - 1) as f64;
            let mut total = 0.0;
            for i in 0..n {
                let (pos, neg) = density(&[lo + h * i as f64]);
                let coef = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                total += coef * pos.min(neg);
            }
            total * h / 3.0
        } else {
            let mut rng = seed::rng(self.cfg.seed, stream, Purpose::MonteCarlo);
            let samples = self.cfg.monte_carlo_samples.max(1);
            let mut total = 0.0;
            for _ in 0..samples {
                let mut u = rng.random::<f64>();
                let mut pick = weights.len() - 1;
                for (j, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = j;
                        break;
                    }
                    u -= w;
                }
                let tail = means[pick].len();
                let z = DVector::from_fn(tail, |_, _| rng.sample::<f64, _>(StandardNormal));
                let x2 = &means[pick] + &self.parts[pick].tail_factor * z;
                let (pos, neg) = density(x2.as_slice());
                total += pos.min(neg) / (pos + neg);
            }
            total / samples as f64
        }
    }

    pub fn head(&self) -> usize {
        self.head
    }
}

/// Reject-rate/error curve of the Bayes two-stage reject classifier on
/// `sample`, one point per stage-two cost in `deltas`.
///
/// Stage one applies Chow's rule with cost-to-go `delta + E[stage-two error |
/// x1]`; stage two classifies by the sign of the full posterior.
pub fn bayes_reject_curve(
    spec: &GaussianMixtureSpec,
    deltas: &[f64],
    sample: &StagedDataset,
    cfg: &BayesCurveConfig,
) -> Result<Vec<BayesCurvePoint>> {
    let layout = sample.layout();
    if layout.num_stages() != 2 {
        return Err(Error::structure("the Bayes curve needs a two-stage layout"));
    }
    if sample.dim() != spec.dim() {
        return Err(Error::structure(format!(
            "sample has {} coordinates, mixture has {}",
            sample.dim(),
            spec.dim()
        )));
    }
    let head = layout.prefix(0).len();
    let mut first: Vec<usize> = layout.prefix(0).to_vec();
    first.sort_unstable();
    if first != (0..head).collect::<Vec<_>>() {
        return Err(Error::structure("stage one must reveal the leading coordinates"));
    }
    let stage_one = spec.marginal(head)?;
    let full = spec.marginal(spec.dim())?;
    let stage_two = StageTwoError::new(spec, head, cfg.clone())?;

    let rows: Vec<(f64, f64, f64, f64)> = sample
        .rows()
        .enumerate()
        .map(|(i, x)| {
            let x1 = &x[..head];
            (
                stage_one.posterior(x1),
                stage_two.at(x1, i as u64),
                full.posterior(x),
                sample.y(i),
            )
        })
        .collect();

    let n = rows.len() as f64;
    Ok(deltas
        .iter()
        .map(|&delta| {
            let mut rejected = 0usize;
            let mut errors = 0usize;
            for &(p1, e2, p2, y) in &rows {
                let label = if super::factorized_stage(p1, delta + e2).decision().is_some() {
                    if p1 >= 0.5 { 1.0 } else { -1.0 }
                } else {
                    rejected += 1;
                    if p2 >= 0.5 { 1.0 } else { -1.0 }
                };
                if label != y {
                    errors += 1;
                }
            }
            let reject_rate = rejected as f64 / n;
            BayesCurvePoint {
                delta,
                reject_rate,
                error: errors as f64 / n,
                avg_cost: delta * reject_rate,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mirror() -> GaussianMixtureSpec {
        let c = |m: [f64; 2]| component(1.0, &m, &[1.0, 1.0]);
        GaussianMixtureSpec {
            positive: ClassMixture { prior: 0.5, components: vec![c([1.0, 0.0])] },
            negative: ClassMixture { prior: 0.5, components: vec![c([-1.0, 0.0])] },
        }
    }

    #[test]
    fn symmetry_axis_is_uninformative() {
        let p = mixture_posterior(&mirror(), &[0.0, 3.0]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_ratio_two_gives_two_thirds() {
        // Unit-variance means at ±1 in one coordinate: the log ratio is 2x.
        let x = 2f64.ln() / 2.0;
        let p = mixture_posterior(&mirror(), &[x]).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = mirror();
        s.positive.components[0].covariance = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(s.validate().is_err());
        let mut s = mirror();
        s.negative.prior = 0.7;
        assert!(s.validate().is_err());
        assert!(GaussianMixtureSpec::standard().validate().is_ok());
        assert!(GaussianMixtureSpec::three_stage().validate().is_ok());
    }

    #[test]
    fn stage_two_error_with_independent_tail() {
        // The second coordinate does not depend on the class, so the stage-two
        // error equals the stage-one error min(p, 1 - p).
        let spec = mirror();
        let est = StageTwoError::new(&spec, 1, BayesCurveConfig::default()).unwrap();
        for x in [-1.0, 0.0, 0.3, 2.0] {
            let p = mixture_posterior(&spec, &[x]).unwrap();
            assert!((est.at(&[x], 0) - p.min(1.0 - p)).abs() < 1e-8);
        }
    }
}
