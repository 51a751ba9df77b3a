//! Fully resolved command configurations and their execution.
//!
//! Every command is turned into a [`RunConfig`] before it runs. The same value
//! is written as JSON beside the outputs and can be executed again with
//! `stagewise replay`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stagewise::data::{self, DatasetManifest, MixtureChoice};
use stagewise::evaluation::{
    self, write_curve_csv, write_roc_csv, write_stage_map_csv, Grid, Method, SweepConfig,
};
use stagewise::oracle::{self, BayesCurveConfig, DiscreteInstance};
use stagewise::surrogate::ErrorPenalty;
use stagewise::trainer::{self, TrainConfig};
use stagewise::StagedDataset;

use crate::error::CliError;

pub type CliResult<T> = Result<T, CliError>;

/// A dataset manifest plus the directory its relative paths resolve against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub manifest: DatasetManifest,
    pub base_dir: PathBuf,
}

impl DataSource {
    pub fn load(&self) -> CliResult<StagedDataset> {
        Ok(self.manifest.load(&self.base_dir)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenDataRun {
    pub mixture: MixtureChoice,
    pub n: usize,
    pub seed: u64,
    pub quantize: Option<usize>,
    pub costs: Vec<f64>,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FetchRun {
    pub name: String,
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub data: DataSource,
    pub train: TrainConfig,
    /// Recorded for provenance; training itself is deterministic.
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub data: DataSource,
    pub method: Method,
    pub grid: Grid,
    pub sweep: SweepConfig,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocRun {
    pub data: DataSource,
    pub deltas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sweep: SweepConfig,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageMapRun {
    pub data: DataSource,
    pub delta2_grid: Vec<f64>,
    pub delta3_grid: Vec<f64>,
    pub sweep: SweepConfig,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpRun {
    pub instance: DiscreteInstance,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesCurveRun {
    pub mixture: MixtureChoice,
    pub deltas: Vec<f64>,
    /// Size of the sample the reject rates and errors are measured on.
    pub samples: usize,
    pub seed: u64,
    pub curve: BayesCurveConfig,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    GenData(GenDataRun),
    Fetch(FetchRun),
    Train(TrainRun),
    Sweep(SweepRun),
    Roc(RocRun),
    StageMap(StageMapRun),
    OracleDp(DpRun),
    BayesCurve(BayesCurveRun),
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(CliError::io(format!("creating {}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(CliError::io(format!("writing {}", path.display())))
}

impl RunConfig {
    /// Parses a configuration; errors name the offending field.
    ///
    /// The `command` tag is read first and the variant body is then decoded
    /// on its own, since a tagged enum hides field paths from the decoder.
    pub fn from_json(text: &str) -> CliResult<Self> {
        fn document(path: String, message: String) -> CliError {
            CliError::Core(stagewise::Error::Document { path, message })
        }
        fn body<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> CliResult<T> {
            serde_path_to_error::deserialize(value).map_err(|e| document(e.path().to_string(), e.inner().to_string()))
        }
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| document(".".into(), e.to_string()))?;
        let command = match value.as_object_mut().and_then(|o| o.remove("command")) {
            Some(serde_json::Value::String(c)) => c,
            Some(_) => return Err(document("command".into(), "expected a string".into())),
            None => return Err(document("command".into(), "missing field".into())),
        };
        Ok(match command.as_str() {
            "gen-data" => RunConfig::GenData(body(value)?),
            "fetch" => RunConfig::Fetch(body(value)?),
            "train" => RunConfig::Train(body(value)?),
            "sweep" => RunConfig::Sweep(body(value)?),
            "roc" => RunConfig::Roc(body(value)?),
            "stage-map" => RunConfig::StageMap(body(value)?),
            "oracle-dp" => RunConfig::OracleDp(body(value)?),
            "bayes-curve" => RunConfig::BayesCurve(body(value)?),
            other => return Err(document("command".into(), format!("unknown command `{other}`"))),
        })
    }

    /// Where the resolved configuration is written.
    pub fn config_path(&self) -> Option<PathBuf> {
        let out = match self {
            RunConfig::GenData(r) => &r.out,
            RunConfig::Fetch(r) => return Some(r.dir.join("fetch.config.json")),
            RunConfig::Train(r) => &r.out,
            RunConfig::Sweep(r) => &r.out,
            RunConfig::Roc(r) => &r.out,
            RunConfig::StageMap(r) => &r.out,
            RunConfig::OracleDp(r) => r.out.as_ref()?,
            RunConfig::BayesCurve(r) => &r.out,
        };
        Some(sibling(out, "config.json"))
    }

    pub fn execute(&self) -> CliResult<()> {
        if let Some(path) = self.config_path() {
            write_text(&path, &serde_json::to_string_pretty(self)?)?;
        }
        match self {
            RunConfig::GenData(r) => gen_data(r),
            RunConfig::Fetch(r) => {
                let path = data::fetch(&r.name, &r.dir)?;
                println!("{}", path.display());
                Ok(())
            }
            RunConfig::Train(r) => train(r),
            RunConfig::Sweep(r) => sweep(r),
            RunConfig::Roc(r) => {
                let data = r.data.load()?;
                let curve = evaluation::roc_sweep(&data, &r.deltas, &r.ratios, &r.sweep)?;
                write_roc_csv(create(&r.out)?, &curve)?;
                Ok(())
            }
            RunConfig::StageMap(r) => {
                let data = r.data.load()?;
                let points = evaluation::stage_map(&data, &r.delta2_grid, &r.delta3_grid, &r.sweep)?;
                write_stage_map_csv(create(&r.out)?, &points)?;
                Ok(())
            }
            RunConfig::OracleDp(r) => {
                let solution = oracle::dp_solve(&r.instance)?;
                let text = serde_json::to_string_pretty(&solution)?;
                match &r.out {
                    Some(path) => write_text(path, &text),
                    None => {
                        println!("{text}");
                        Ok(())
                    }
                }
            }
            RunConfig::BayesCurve(r) => bayes_curve(r),
        }
    }
}

fn gen_data(r: &GenDataRun) -> CliResult<()> {
    let spec = r.mixture.resolve()?;
    let data = data::generate_mixture(&spec, r.n, r.seed, r.quantize)?;
    let file_name = r
        .out
        .file_name()
        .ok_or_else(|| CliError::config(format!("`{}` is not a file path", r.out.display())))?;
    let mut manifest = DatasetManifest::synthetic(r.mixture.clone(), r.n, r.seed, r.quantize, r.costs.clone())?;
    manifest.source = data::Source::Csv {
        path: PathBuf::from(file_name),
    };
    let names: Vec<String> = manifest.feature_columns().cloned().collect();
    if let Some(dir) = r.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    }
    data::write_csv(&data, &names, &r.out)?;
    write_text(&sibling(&r.out, "manifest.json"), &manifest.to_json()?)
}

fn train(r: &TrainRun) -> CliResult<()> {
    let data = r.data.load()?;
    let output = trainer::train(&data, &r.train)?;
    write_text(&r.out, &output.model.to_json()?)?;
    let mut w = csv::Writer::from_writer(create(&sibling(&r.out, "trace.csv"))?);
    w.write_record(["visit", "stage", "surrogate_risk"])?;
    w.write_record(["0", "", &output.initial_risk.to_string()])?;
    for (i, (risk, stage)) in output.risk_trace.iter().zip(&output.schedule).enumerate() {
        w.write_record([(i + 1).to_string(), (stage + 1).to_string(), risk.to_string()])?;
    }
    w.flush().map_err(CliError::io("writing the risk trace"))?;
    let hard = output.model.empirical_hard_risk(&data)?;
    log::info!(
        "surrogate risk {:.6} -> {:.6}, training hard risk {hard:.6}",
        output.initial_risk,
        output.risk_trace.last().copied().unwrap_or(output.initial_risk)
    );
    Ok(())
}

fn sweep(r: &SweepRun) -> CliResult<()> {
    let data = r.data.load()?;
    let result = evaluation::sweep(&data, r.method, &r.grid, &r.sweep)?;
    let stages = data.layout().num_stages();
    let names: Vec<String> = match (&r.grid, r.method) {
        (Grid::Quantiles(_), _) => vec!["level".into()],
        (Grid::Values(_), Method::Global) => (2..=stages).map(|k| format!("delta_{k}")).collect(),
        (Grid::Values(_), _) => (1..stages).map(|k| format!("t_{k}")).collect(),
    };
    write_curve_csv(create(&r.out)?, r.method.name(), &names, &result.points)?;
    Ok(())
}

fn bayes_curve(r: &BayesCurveRun) -> CliResult<()> {
    let spec = r.mixture.resolve()?;
    let sample = data::generate_mixture(&spec, r.samples, r.seed, None)?;
    let points = oracle::bayes_reject_curve(&spec, &r.deltas, &sample, &r.curve)?;
    let mut w = csv::Writer::from_writer(create(&r.out)?);
    w.write_record(["delta", "reject_rate", "error", "avg_cost"])?;
    for p in points {
        w.write_record([p.delta, p.reject_rate, p.error, p.avg_cost].map(|v| v.to_string()))?;
    }
    w.flush().map_err(CliError::io("writing the Bayes curve"))?;
    Ok(())
}

/// Stage costs for a scalar grid value: the same cost at every later stage.
pub fn broadcast(values: &[f64], reject_stages: usize) -> Vec<Vec<f64>> {
    values.iter().map(|&v| vec![v; reject_stages]).collect()
}

pub fn train_config(boost: stagewise::boosting::BoostConfig, outer_loops: usize, deltas: Vec<f64>, ratio: f64) -> TrainConfig {
    TrainConfig {
        boost,
        outer_loops,
        deltas,
        penalty: ErrorPenalty::from_ratio(ratio),
    }
}
