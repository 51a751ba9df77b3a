use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A stage decision: a class index, or defer to the next stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Classify(usize),
    Reject,
}

/// Chow's rule with reject cost `cost_to_go`: classify as the most probable
/// class when its posterior exceeds `1 - cost_to_go`, otherwise reject.
/// The test is written `max + cost_to_go > 1`, which is exact when both are
/// multiples of 0.01.
///
/// Ties in the argmax go to the lowest class index; a maximum exactly equal to
/// `1 - cost_to_go` rejects.
pub fn chow_decision(posterior: &[f64], cost_to_go: f64) -> Result<Decision> {
    if posterior.is_empty() {
        return Err(Error::input("posterior is empty"));
    }
    if posterior.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::input("posterior entries must lie in [0, 1]"));
    }
    let total: f64 = posterior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("posterior sums to {total}, not 1")));
    }
    if !(cost_to_go.is_finite() && cost_to_go >= 0.0) {
        return Err(Error::input(format!("cost-to-go must be >= 0, got {cost_to_go}")));
    }
    Ok(chow_unchecked(posterior, cost_to_go))
}

pub(crate) fn chow_unchecked(posterior: &[f64], cost_to_go: f64) -> Decision {
    let (best, max) = argmax(posterior);
    if max + cost_to_go > 1.0 {
        Decision::Classify(best)
    } else {
        Decision::Reject
    }
}

pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

/// Binary stage decision as two biased classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorizedStage {
    /// Positive-biased decision: `+1` iff `P(+1|x) >= cost_to_go`.
    pub positive: i8,
    /// Negative-biased decision: `+1` iff `P(+1|x) > 1 - cost_to_go`.
    pub negative: i8,
}

impl FactorizedStage {
    /// `Some(label)` where the two agree, `None` (reject) where they disagree.
    pub fn decision(&self) -> Option<i8> {
        (self.positive == self.negative).then_some(self.positive)
    }
}

/// The two binary classifiers whose disagreement region is the Bayes reject
/// region, for posterior `p_pos = P(y = +1 | x)`.
///
/// Above a cost-to-go of 1/2 rejecting is never optimal and both classifiers
/// collapse onto the Bayes decision (`+1` on ties, matching Chow's rule over
/// the class order `[+1, -1]`).
pub fn factorized_stage(p_pos: f64, cost_to_go: f64) -> FactorizedStage {
    if cost_to_go <= 0.5 {
        FactorizedStage {
            positive: if p_pos >= cost_to_go { 1 } else { -1 },
            negative: if p_pos + cost_to_go > 1.0 { 1 } else { -1 },
        }
    } else {
        let label = if p_pos >= 1.0 - p_pos { 1 } else { -1 };
        FactorizedStage {
            positive: label,
            negative: label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confident_posterior_classifies() {
        assert_eq!(chow_decision(&[0.9, 0.1], 0.3).unwrap(), Decision::Classify(0));
    }

    #[test]
    fn uncertain_posterior_rejects() {
        assert_eq!(chow_decision(&[0.6, 0.4], 0.3).unwrap(), Decision::Reject);
    }

    #[test]
    fn expensive_reject_never_taken() {
        assert_eq!(chow_decision(&[0.5, 0.5], 0.6).unwrap(), Decision::Classify(0));
    }

    #[test]
    fn boundary_rejects() {
        assert_eq!(chow_decision(&[0.75, 0.25], 0.25).unwrap(), Decision::Reject);
    }

    #[test]
    fn malformed_posterior() {
        assert!(chow_decision(&[0.5, 0.6], 0.1).is_err());
        assert!(chow_decision(&[], 0.1).is_err());
        assert!(chow_decision(&[1.2, -0.2], 0.1).is_err());
    }

    #[test]
    fn factorized_examples() {
        let s = factorized_stage(0.9, 0.2);
        assert_eq!((s.positive, s.negative), (1, 1));
        let s = factorized_stage(0.5, 0.2);
        assert_eq!((s.positive, s.negative), (1, -1));
        assert_eq!(s.decision(), None);
    }

    #[test]
    fn factorized_matches_chow_on_a_grid() {
        for pi in 0..=100 {
            for di in 0..=100 {
                let p = pi as f64 / 100.0;
                let d = di as f64 / 100.0;
                let chow = match chow_unchecked(&[p, 1.0 - p], d) {
                    Decision::Classify(0) => Some(1),
                    Decision::Classify(_) => Some(-1),
                    Decision::Reject => None,
                };
                assert_eq!(factorized_stage(p, d).decision(), chow, "p={p} d={d}");
            }
        }
    }
}
