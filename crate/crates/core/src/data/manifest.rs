use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{csvio, fetch, generate_mixture};
use crate::error::{Error, Result};
use crate::model::{Stage, StageLayout, StagedDataset};
use crate::oracle::GaussianMixtureSpec;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop rows with a missing or unparseable feature.
    #[default]
    DropRow,
    /// Replace missing features with the column median of the present values.
    ImputeMedian,
}

/// A named built-in mixture or an explicit one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MixtureChoice {
    Named(String),
    Spec(GaussianMixtureSpec),
}

impl MixtureChoice {
    pub fn resolve(&self) -> Result<GaussianMixtureSpec> {
        match self {
            MixtureChoice::Named(name) => match name.as_str() {
                "standard" => Ok(GaussianMixtureSpec::standard()),
                "three_stage" => Ok(GaussianMixtureSpec::three_stage()),
                other => Err(Error::input(format!(
                    "unknown mixture `{other}` (expected `standard` or `three_stage`)"
                ))),
            },
            MixtureChoice::Spec(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// A local CSV file, relative to the manifest's directory.
    Csv { path: PathBuf },
    /// A named public dataset downloaded into the cache directory.
    Fetch { name: String },
    /// Draws from a Gaussian mixture; columns are named `x1, x2, ...` and the
    /// label column `label` holds `1` / `-1`.
    Synthetic {
        mixture: MixtureChoice,
        n: usize,
        seed: u64,
        #[serde(default)]
        quantize: Option<usize>,
    },
}

/// How to turn a table into a staged dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub source: Source,
    pub label_column: String,
    /// Raw label value to `+1` / `-1`.
    pub label_mapping: BTreeMap<String, i8>,
    /// Column names revealed at each stage, in stage order.
    #[serde(alias = "stage_assignment")]
    pub stages: Vec<Vec<String>>,
    /// Columns present in the table but not used.
    #[serde(default)]
    pub ignore: Vec<String>,
    /// Entry costs of stages `2..=K`.
    pub costs: Vec<f64>,
    /// Equal-width quantization levels per column.
    #[serde(default)]
    pub quantization: BTreeMap<String, usize>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
}

impl DatasetManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let manifest: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Document {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Manifest for a synthetic mixture with one stage per coordinate.
    pub fn synthetic(mixture: MixtureChoice, n: usize, seed: u64, quantize: Option<usize>, costs: Vec<f64>) -> Result<Self> {
        let dim = mixture.resolve()?.dim();
        let manifest = Self {
            version: MANIFEST_VERSION,
            source: Source::Synthetic {
                mixture,
                n,
                seed,
                quantize,
            },
            label_column: "label".into(),
            label_mapping: BTreeMap::from([("1".into(), 1), ("-1".into(), -1)]),
            stages: (1..=dim).map(|d| vec![format!("x{d}")]).collect(),
            ignore: Vec::new(),
            costs,
            quantization: BTreeMap::new(),
            missing_policy: MissingPolicy::DropRow,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::input(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if self.stages.is_empty() || self.stages.iter().any(Vec::is_empty) {
            return Err(Error::input("every stage needs at least one column"));
        }
        if self.costs.len() + 1 != self.stages.len() {
            return Err(Error::input(format!(
                "{} stages need {} costs, got {}",
                self.stages.len(),
                self.stages.len() - 1,
                self.costs.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in self.feature_columns().chain(&self.ignore).chain([&self.label_column]) {
            if !seen.insert(name) {
                return Err(Error::input(format!("column `{name}` is assigned more than once")));
            }
        }
        if let Some(name) = self.quantization.keys().find(|c| !self.feature_columns().any(|f| &f == c)) {
            return Err(Error::input(format!("quantized column `{name}` is not a stage feature")));
        }
        if self.label_mapping.values().any(|&v| v != 1 && v != -1) {
            return Err(Error::input("label mapping values must be 1 or -1"));
        }
        Ok(())
    }

    /// Feature columns in stage order.
    pub fn feature_columns(&self) -> impl Iterator<Item = &String> {
        self.stages.iter().flatten()
    }

    /// Layout over the feature columns in stage order.
    pub fn layout(&self) -> Result<StageLayout> {
        let mut next = 0;
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(k, cols)| {
                let features = (next..next + cols.len()).collect();
                next += cols.len();
                Stage {
                    features,
                    cost: if k == 0 { 0.0 } else { self.costs[k - 1] },
                }
            })
            .collect();
        StageLayout::new(stages)
    }

    /// Loads the dataset described by this manifest. Relative CSV paths are
    /// resolved against `base`.
    pub fn load(&self, base: &Path) -> Result<StagedDataset> {
        self.validate()?;
        match &self.source {
            Source::Csv { path } => csvio::load_csv(self, &base.join(path)),
            Source::Fetch { name } => {
                let path = fetch::fetch(name, &fetch::cache_dir())?;
                csvio::load_csv(self, &path)
            }
            Source::Synthetic {
                mixture,
                n,
                seed,
                quantize,
            } => {
                let data = generate_mixture(&mixture.resolve()?, *n, *seed, *quantize)?;
                let names: Vec<String> = (1..=data.dim()).map(|d| format!("x{d}")).collect();
                let order = self
                    .feature_columns()
                    .map(|c| {
                        names
                            .iter()
                            .position(|n| n == c)
                            .ok_or_else(|| Error::input(format!("unknown synthetic column `{c}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if order.len() != names.len() {
                    return Err(Error::input("synthetic manifests must assign every coordinate"));
                }
                let features = data.features().select(ndarray::Axis(1), &order);
                StagedDataset::new(features, data.labels().to_vec(), self.layout()?)
            }
        }
    }
}
