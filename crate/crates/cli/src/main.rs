//! `stagewise` command-line driver.

mod error;
mod grid;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stagewise::boosting::BoostConfig;
use stagewise::data::{self, DatasetManifest, MixtureChoice, Source};
use stagewise::evaluation::{Grid, Method, SweepConfig};
use stagewise::oracle::{BayesCurveConfig, DiscreteInstance, GaussianMixtureSpec};

use error::{CliError, EXIT_CONFIG};
use grid::parse_grid;
use run::{
    broadcast, train_config, BayesCurveRun, CliResult, DataSource, DpRun, FetchRun, GenDataRun, RocRun,
    RunConfig, StageMapRun, SweepRun, TrainRun,
};

#[derive(Parser)]
#[command(name = "stagewise", version, about = "Train and evaluate multi-stage reject classifiers")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Gaussian-mixture dataset and write it with its manifest.
    GenData(GenDataArgs),
    /// Download a public dataset into the cache directory.
    Fetch(FetchArgs),
    /// Train a multi-stage model.
    Train(TrainArgs),
    /// Reject-rate/error curve of one method over a parameter grid.
    Sweep(SweepArgs),
    /// ROC family over error-penalty ratios at fixed stage costs.
    Roc(RocArgs),
    /// Stage usage of a three-stage system over a grid of stage costs.
    StageMap(StageMapArgs),
    /// Reference solutions.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Re-run a command from the resolved configuration it wrote.
    Replay {
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Optimal policy of a discrete instance by backward induction.
    Dp {
        #[arg(long)]
        instance: PathBuf,
        /// Output JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bayes reject-rate/error curve of a two-stage mixture.
    BayesCurve {
        #[arg(long, default_value = "standard")]
        mixture: String,
        #[arg(long, default_value = "0:0.025:0.5")]
        delta_grid: String,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenDataArgs {
    /// `standard`, `three_stage`, or a JSON mixture file.
    #[arg(long, default_value = "standard")]
    mixture: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    quantize: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stage costs recorded in the manifest; defaults to 0.1 per later stage.
    #[arg(long)]
    costs: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FetchArgs {
    /// Dataset name (`pima` or `mammographic_mass`).
    name: String,
    /// Cache directory; defaults to `$STAGEWISE_DATA_DIR` or `.stagewise-cache`.
    #[arg(long)]
    dir: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// CSV file to read instead of the manifest's source.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct BoostArgs {
    /// Boosting rounds per stage subproblem.
    #[arg(long = "T", default_value_t = 50)]
    iterations: usize,
    /// Outer loops over the stages.
    #[arg(long = "D", default_value_t = 10)]
    outer_loops: usize,
    /// Regularization strength.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Upper end of the step-size search.
    #[arg(long, default_value_t = 10.0)]
    step_max: f64,
}

impl BoostArgs {
    fn boost(&self) -> BoostConfig {
        BoostConfig {
            iterations: self.iterations,
            lambda: self.lambda,
            step_max: self.step_max,
            ..BoostConfig::default()
        }
    }
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// Plain random splits instead of class-stratified ones.
    #[arg(long)]
    no_stratify: bool,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
}

impl TrialArgs {
    fn sweep_config(&self, boost: &BoostArgs) -> SweepConfig {
        let defaults = SweepConfig::default();
        SweepConfig {
            trials: self.trials,
            seed: self.seed,
            train_fraction: self.train_fraction,
            stratified: !self.no_stratify,
            boost: boost.boost(),
            baseline_boost: BoostConfig {
                iterations: boost.iterations,
                lambda: boost.lambda,
                step_max: boost.step_max,
                ..defaults.baseline_boost
            },
            outer_loops: boost.outer_loops,
            jobs: self.jobs,
            ..defaults
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Stage costs, one per later stage; the manifest's costs by default.
    #[arg(long)]
    deltas: Option<String>,
    #[command(flatten)]
    boost: BoostArgs,
    /// Ratio of the positive to the negative error penalty.
    #[arg(long, default_value_t = 1.0)]
    penalty_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Global,
    Myopic,
    Utility,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "global")]
    method: MethodArg,
    /// Stage costs for the global method, applied to every later stage.
    #[arg(long, default_value = "0:0.05:0.5")]
    delta_grid: String,
    /// Baseline thresholds, or `auto` for training-set quantiles of the
    /// rejection statistic at reject levels 0, 0.05, ..., 1.
    #[arg(long, default_value = "auto")]
    t_grid: String,
    #[command(flatten)]
    boost: BoostArgs,
    #[command(flatten)]
    trials: TrialArgs,
    #[arg(long, default_value_t = 20)]
    utility_bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RocArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Stage costs, one per later stage.
    #[arg(long)]
    deltas: String,
    /// Positive-to-negative error penalty ratios.
    #[arg(long, default_value = "0.125,0.25,0.5,1,2,4,8")]
    ratios: String,
    #[command(flatten)]
    boost: BoostArgs,
    #[command(flatten)]
    trials: TrialArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StageMapArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "0:0.1:0.5")]
    d2_grid: String,
    #[arg(long, default_value = "0:0.1:0.5")]
    d3_grid: String,
    #[command(flatten)]
    boost: BoostArgs,
    #[command(flatten)]
    trials: TrialArgs,
    #[arg(long)]
    out: PathBuf,
}

fn grid_arg(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    parse_grid(text).map_err(|e| CliError::config(format!("--{flag}: {e}")))
}

fn mixture_arg(text: &str) -> CliResult<MixtureChoice> {
    match text {
        "standard" | "three_stage" => Ok(MixtureChoice::Named(text.into())),
        path => {
            let body = std::fs::read_to_string(path).map_err(CliError::io(format!("reading {path}")))?;
            let spec: GaussianMixtureSpec = serde_json::from_str(&body)?;
            spec.validate()?;
            Ok(MixtureChoice::Spec(spec))
        }
    }
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    std::path::absolute(path).map_err(CliError::io(format!("resolving {}", path.display())))
}

impl DataArgs {
    fn resolve(&self) -> CliResult<DataSource> {
        let mut manifest = DatasetManifest::from_path(&self.manifest)?;
        let base_dir = match &self.data {
            Some(csv) => {
                manifest.source = Source::Csv { path: absolute(csv)? };
                PathBuf::from(".")
            }
            None => match self.manifest.parent().filter(|d| !d.as_os_str().is_empty()) {
                Some(dir) => absolute(dir)?,
                None => absolute(Path::new("."))?,
            },
        };
        Ok(DataSource { manifest, base_dir })
    }
}

fn resolve(command: Command) -> CliResult<RunConfig> {
    Ok(match command {
        Command::GenData(a) => {
            let mixture = mixture_arg(&a.mixture)?;
            let stages = mixture.resolve()?.dim();
            let costs = match &a.costs {
                Some(text) => grid_arg("costs", text)?,
                None => vec![0.1; stages.saturating_sub(1)],
            };
            RunConfig::GenData(GenDataRun {
                mixture,
                n: a.n,
                seed: a.seed,
                quantize: a.quantize,
                costs,
                out: a.out,
            })
        }
        Command::Fetch(a) => RunConfig::Fetch(FetchRun {
            name: a.name,
            dir: a.dir.unwrap_or_else(data::cache_dir),
        }),
        Command::Train(a) => {
            let data = a.data.resolve()?;
            let deltas = match &a.deltas {
                Some(text) => grid_arg("deltas", text)?,
                None => data.manifest.costs.clone(),
            };
            RunConfig::Train(TrainRun {
                data,
                train: train_config(a.boost.boost(), a.boost.outer_loops, deltas, a.penalty_ratio),
                seed: a.seed,
                out: a.out,
            })
        }
        Command::Sweep(a) => {
            let data = a.data.resolve()?;
            let reject_stages = data.manifest.stages.len().saturating_sub(1);
            let method = match a.method {
                MethodArg::Global => Method::Global,
                MethodArg::Myopic => Method::Myopic,
                MethodArg::Utility => Method::Utility,
            };
            let grid = match method {
                Method::Global => Grid::Values(broadcast(&grid_arg("delta-grid", &a.delta_grid)?, reject_stages)),
                _ if a.t_grid == "auto" => Grid::Quantiles((0..=20).map(|i| i as f64 * 0.05).collect()),
                _ => Grid::Values(broadcast(&grid_arg("t-grid", &a.t_grid)?, reject_stages)),
            };
            let mut sweep = a.trials.sweep_config(&a.boost);
            sweep.utility_bins = a.utility_bins;
            RunConfig::Sweep(SweepRun {
                data,
                method,
                grid,
                sweep,
                out: a.out,
            })
        }
        Command::Roc(a) => RunConfig::Roc(RocRun {
            data: a.data.resolve()?,
            deltas: grid_arg("deltas", &a.deltas)?,
            ratios: grid_arg("ratios", &a.ratios)?,
            sweep: a.trials.sweep_config(&a.boost),
            out: a.out,
        }),
        Command::StageMap(a) => RunConfig::StageMap(StageMapRun {
            data: a.data.resolve()?,
            delta2_grid: grid_arg("d2-grid", &a.d2_grid)?,
            delta3_grid: grid_arg("d3-grid", &a.d3_grid)?,
            sweep: a.trials.sweep_config(&a.boost),
            out: a.out,
        }),
        Command::Oracle(OracleCommand::Dp { instance, out }) => {
            let text = std::fs::read_to_string(&instance)
                .map_err(CliError::io(format!("reading {}", instance.display())))?;
            RunConfig::OracleDp(DpRun {
                instance: DiscreteInstance::from_json(&text)?,
                out,
            })
        }
        Command::Oracle(OracleCommand::BayesCurve {
            mixture,
            delta_grid,
            samples,
            seed,
            out,
        }) => RunConfig::BayesCurve(BayesCurveRun {
            mixture: mixture_arg(&mixture)?,
            deltas: grid_arg("delta-grid", &delta_grid)?,
            samples,
            seed,
            curve: BayesCurveConfig {
                seed,
                ..BayesCurveConfig::default()
            },
            out,
        }),
        Command::Replay { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(CliError::io(format!("reading {}", config.display())))?;
            RunConfig::from_json(&text)?
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match resolve(cli.command).and_then(|config| config.execute()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
