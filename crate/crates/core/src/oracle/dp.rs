use serde::{Deserialize, Serialize};

use super::chow::{argmax, Decision};
use crate::error::{Error, Result};

/// Largest number of full feature tuples an instance may enumerate.
pub const MAX_CELLS: usize = 1_000_000;

/// A finite joint distribution over staged discrete features and classes.
///
/// Stage `k` observes one symbol from `stage_alphabets[k]`. The JSON form is
///
/// ```json
/// {
///   "stage_alphabets": [[0, 1], [0, 1, 2]],
///   "num_classes": 2,
///   "joint": [{"features": [0, 2], "class": 1, "p": 0.25}, ...],
///   "deltas": [0.1]
/// }
/// ```
///
/// Feature tuples are written as alphabet values and classes as `1..=C`;
/// tuples missing from `joint` have probability zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteInstance {
    pub stage_alphabets: Vec<Vec<f64>>,
    pub num_classes: usize,
    pub joint: Vec<JointEntry>,
    pub deltas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub features: Vec<f64>,
    pub class: usize,
    pub p: f64,
}

impl DiscreteInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let inst: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Document {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Ok(inst)
    }

    /// Builds an instance from a dense table indexed `[tuple][class]`, tuples
    /// in row-major order over `sizes` with alphabet values `0..n`.
    pub fn from_dense(sizes: &[usize], num_classes: usize, table: &[f64], deltas: Vec<f64>) -> Result<Self> {
        let cells: usize = sizes.iter().product();
        if table.len() != cells * num_classes {
            return Err(Error::input(format!(
                "dense table has {} entries, expected {}",
                table.len(),
                cells * num_classes
            )));
        }
        let mut joint = Vec::new();
        for t in 0..cells {
            let features = unrank(t, sizes).into_iter().map(|v| v as f64).collect::<Vec<_>>();
            for c in 0..num_classes {
                let p = table[t * num_classes + c];
                if p != 0.0 {
                    joint.push(JointEntry {
                        features: features.clone(),
                        class: c + 1,
                        p,
                    });
                }
            }
        }
        Ok(Self {
            stage_alphabets: sizes.iter().map(|&n| (0..n).map(|v| v as f64).collect()).collect(),
            num_classes,
            joint,
            deltas,
        })
    }

    pub fn num_stages(&self) -> usize {
        self.stage_alphabets.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.stage_alphabets.iter().map(Vec::len).collect()
    }

    /// Validates the instance and lays the joint out densely.
    pub fn dense(&self) -> Result<Vec<f64>> {
        let k = self.num_stages();
        if k == 0 {
            return Err(Error::input("at least one stage alphabet is required"));
        }
        if let Some(i) = self.stage_alphabets.iter().position(Vec::is_empty) {
            return Err(Error::input(format!("stage {i} alphabet is empty")));
        }
        if self.num_classes < 2 {
            return Err(Error::input("at least two classes are required"));
        }
        if self.deltas.len() + 1 != k {
            return Err(Error::input(format!(
                "{k} stages need {} costs, got {}",
                k - 1,
                self.deltas.len()
            )));
        }
        if self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::input("stage costs must be finite and >= 0"));
        }
        let cells = self
            .stage_alphabets
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
            .filter(|&c| c <= MAX_CELLS)
            .ok_or_else(|| Error::Capacity(format!("more than {MAX_CELLS} feature tuples")))?;

        let sizes = self.sizes();
        let c = self.num_classes;
        let mut table = vec![0.0; cells * c];
        for (e, entry) in self.joint.iter().enumerate() {
            if entry.features.len() != k {
                return Err(Error::input(format!("joint[{e}] has {} features, expected {k}", entry.features.len())));
            }
            if !(1..=c).contains(&entry.class) {
                return Err(Error::input(format!("joint[{e}] class {} outside 1..={c}", entry.class)));
            }
            if !(entry.p.is_finite() && entry.p >= 0.0) {
                return Err(Error::input(format!("joint[{e}] probability {} is invalid", entry.p)));
            }
            let mut t = 0;
            for (s, v) in entry.features.iter().enumerate() {
                let idx = self.stage_alphabets[s]
                    .iter()
                    .position(|a| a == v)
                    .ok_or_else(|| Error::input(format!("joint[{e}] value {v} not in stage {s} alphabet")))?;
                t = t * sizes[s] + idx;
            }
            table[t * c + entry.class - 1] += entry.p;
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("joint probabilities sum to {total}, not 1")));
        }
        Ok(table)
    }
}

fn unrank(mut t: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for s in (0..sizes.len()).rev() {
        out[s] = t % sizes[s];
        t /= sizes[s];
    }
    out
}

/// Optimal decision at one observed prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixDecision {
    /// Observed alphabet values of stages `0..=k`.
    pub prefix: Vec<f64>,
    /// Probability of observing the prefix.
    pub mass: f64,
    /// Class posterior given the prefix (uniform when the prefix has zero mass).
    pub posterior: Vec<f64>,
    /// Expected cost of rejecting; absent at the last stage.
    pub cost_to_go: Option<f64>,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePolicy {
    pub decisions: Vec<PrefixDecision>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpSolution {
    pub policy: Vec<StagePolicy>,
    pub expected_risk: f64,
}

/// Exact backward induction over every prefix of a discrete instance.
///
/// Works on joint masses, so any class prior is handled. At stage `k` the
/// value of a prefix is the smaller of its classification error mass and its
/// rejection mass `delta(k+1) P(prefix) + Σ value(extended prefix)`; the
/// resulting decision is Chow's rule on the posterior with the normalized
/// rejection mass as cost-to-go, rejecting on ties.
pub fn dp_solve(instance: &DiscreteInstance) -> Result<DpSolution> {
    let joint = instance.dense()?;
    let sizes = instance.sizes();
    let k = sizes.len();
    let c = instance.num_classes;

    // masses[s][p * c + j]: probability of prefix p of stages 0..=s with class j.
    let mut masses = vec![joint];
    for s in (0..k - 1).rev() {
        let next = &masses[0];
        let n = sizes[s + 1];
        let prefixes = next.len() / c / n;
        let mut m = vec![0.0; prefixes * c];
        for p in 0..prefixes {
            for x in 0..n {
                for j in 0..c {
                    m[p * c + j] += next[(p * n + x) * c + j];
                }
            }
        }
        masses.insert(0, m);
    }

    let mut values: Vec<f64> = Vec::new();
    let mut policy = vec![StagePolicy { decisions: Vec::new() }; k];
    for s in (0..k).rev() {
        let m = &masses[s];
        let prefixes = m.len() / c;
        let sub = &sizes[..=s];
        let mut here = Vec::with_capacity(prefixes);
        let mut decisions = Vec::with_capacity(prefixes);
        for p in 0..prefixes {
            let row = &m[p * c..(p + 1) * c];
            let mass: f64 = row.iter().sum();
            let (best, top) = argmax(row);
            let classify = mass - top;
            let reject = (s + 1 < k).then(|| {
                let n = sizes[s + 1];
                instance.deltas[s] * mass + values[p * n..(p + 1) * n].iter().sum::<f64>()
            });
            let (value, decision) = match reject {
                Some(r) if r <= classify => (r, Decision::Reject),
                _ => (classify, Decision::Classify(best)),
            };
            let posterior = if mass > 0.0 {
                row.iter().map(|v| v / mass).collect()
            } else {
                vec![1.0 / c as f64; c]
            };
            let cost_to_go = reject.map(|r| if mass > 0.0 { r / mass } else { instance.deltas[s] });
            here.push(value);
            decisions.push(PrefixDecision {
                prefix: unrank(p, sub)
                    .into_iter()
                    .enumerate()
                    .map(|(st, i)| instance.stage_alphabets[st][i])
                    .collect(),
                mass,
                posterior,
                cost_to_go,
                decision,
            });
        }
        values = here;
        policy[s] = StagePolicy { decisions };
    }

    Ok(DpSolution {
        policy,
        expected_risk: values.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reveal_at_stage_two(delta: f64) -> DiscreteInstance {
        // x1 in {0, 1} carries no information; x2 equals the class.
        let mut table = vec![0.0; 2 * 2 * 2];
        for x1 in 0..2 {
            for c in 0..2 {
                table[(x1 * 2 + c) * 2 + c] = 0.25;
            }
        }
        DiscreteInstance::from_dense(&[2, 2], 2, &table, vec![delta]).unwrap()
    }

    #[test]
    fn cheap_informative_stage_rejects_everything() {
        let sol = dp_solve(&reveal_at_stage_two(0.1)).unwrap();
        assert!((sol.expected_risk - 0.1).abs() < 1e-15);
        assert!(sol.policy[0].decisions.iter().all(|d| d.decision == Decision::Reject));
    }

    #[test]
    fn expensive_stage_is_never_entered() {
        let sol = dp_solve(&reveal_at_stage_two(0.6)).unwrap();
        assert!((sol.expected_risk - 0.5).abs() < 1e-15);
        assert!(sol.policy[0]
            .decisions
            .iter()
            .all(|d| matches!(d.decision, Decision::Classify(_))));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let inst = reveal_at_stage_two(0.1);
        let text = serde_json::to_string(&inst).unwrap();
        assert_eq!(DiscreteInstance::from_json(&text).unwrap(), inst);

        let bad = r#"{"stage_alphabets": [[0]], "num_classes": 2, "joint": [{"features": [0], "class": 1, "p": "x"}], "deltas": []}"#;
        match DiscreteInstance::from_json(bad) {
            Err(Error::Document { path, .. }) => assert_eq!(path, "joint[0].p"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let inst = DiscreteInstance {
            stage_alphabets: vec![vec![0.0; 1001], vec![0.0; 1001]],
            num_classes: 2,
            joint: vec![],
            deltas: vec![0.1],
        };
        assert!(matches!(inst.dense(), Err(Error::Capacity(_))));
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let mut inst = reveal_at_stage_two(0.1);
        inst.joint[0].p = 0.3;
        assert!(inst.dense().is_err());
    }
}
