//! Batch driver: generate synthetic option data, train either backend, and
//! evaluate with the error-bar metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use bnn_core::evidence::{self, ArdBatch};
use bnn_core::hmc::{self, DEFAULT_TRAJECTORY_LENGTH};
use bnn_core::options::{self, Dataset, GeneratorConfig, NormStats, FEATURE_NAMES};
use bnn_core::{ArdConfig, HmcConfig, Hyperparameters, Matrix, NetworkLayout, NetworkWeights, PredictiveResult};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "bnn", version, about = "Bayesian MLP option pricing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic American call-option dataset as CSV.
    Generate(GenerateArgs),
    /// Train a Bayesian MLP and write a model artifact.
    Train(TrainArgs),
    /// Evaluate a model artifact on its held-out test split.
    Evaluate(EvaluateArgs),
}

/// Closed interval given as `lo,hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval(pub f64, pub f64);

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        Ok(Self(parse(lo)?, parse(hi)?))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 3051)]
    pub rows: usize,
    #[arg(long, default_value_t = 100.0)]
    pub spot: f64,
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.03)]
    pub dividend: f64,
    #[arg(long, default_value = "0.2,0.5")]
    pub vol_range: Interval,
    #[arg(long, default_value = "85,115")]
    pub strike_range: Interval,
    /// Days to maturity.
    #[arg(long, default_value = "60,365")]
    pub maturity_range: Interval,
    #[arg(long, default_value_t = 0.05)]
    pub spread: f64,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 500)]
    pub tree_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl GenerateArgs {
    pub fn config(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_rows: self.rows,
            spot: self.spot,
            rate: self.rate,
            dividend_yield: self.dividend,
            volatility_range: (self.vol_range.0, self.vol_range.1),
            strike_range: (self.strike_range.0, self.strike_range.1),
            maturity_range: (self.maturity_range.0, self.maturity_range.1),
            spread_fraction: self.spread,
            noise_std: self.noise,
            tree_steps: self.tree_steps,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ard,
    Hmc,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = 10)]
    pub hidden: usize,
    /// Data-error coefficient (initial value for ard, fixed for hmc).
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    /// Initial prior inverse variance for every weight group.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// [ard] optimiser cycles per outer loop (default 500).
    #[arg(long)]
    pub cycles: Option<usize>,
    /// [ard] re-estimation cycles per outer loop (default 10).
    #[arg(long)]
    pub evidence_cycles: Option<usize>,
    /// [ard] outer loops (default 1).
    #[arg(long)]
    pub loops: Option<usize>,
    /// [hmc] retained samples (default 100).
    #[arg(long)]
    pub samples: Option<usize>,
    /// [hmc] states discarded at the start of the chain (default 100).
    #[arg(long)]
    pub burnin: Option<usize>,
    /// [hmc] leapfrog step size (default 0.002).
    #[arg(long)]
    pub step_size: Option<f64>,
    /// [hmc] leapfrog steps per trajectory (default 50).
    #[arg(long)]
    pub traj_len: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub train: usize,
    #[arg(long, default_value_t = 300)]
    pub test: usize,
    /// Seeds the split, the weight initialisation, and the sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotCount {
    All,
    First(usize),
}

impl FromStr for PlotCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            Ok(Self::All)
        } else {
            s.parse().map(Self::First).map_err(|_| format!("expected a count or `all`, got `{s}`"))
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Per-point predictions CSV (index,actual,predicted,lower,upper).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Machine-readable key=value report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "100")]
    pub plot_count: PlotCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Rows in the data file the split was drawn from.
    pub source_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ModelBody {
    Ard {
        weights: Vec<f64>,
        hp: Hyperparameters,
        /// Row-major `W × W`.
        hessian: Vec<f64>,
        training_cycles: usize,
        evidence_cycles: usize,
        outer_loops: usize,
    },
    Hmc {
        samples: Vec<Vec<f64>>,
        hp: Hyperparameters,
        accept_count: usize,
        propose_count: usize,
        step_size: f64,
        trajectory_length: usize,
        burn_in: usize,
    },
}

/// Trained model as persisted by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub layout: NetworkLayout,
    pub split: SplitSpec,
    pub norm_stats: NormStats,
    pub train_seconds: f64,
    pub model: ModelBody,
}

impl ModelArtifact {
    pub fn method(&self) -> Method {
        match self.model {
            ModelBody::Ard { .. } => Method::Ard,
            ModelBody::Hmc { .. } => Method::Hmc,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text).context("model artifact is not JSON")?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        ensure!(
            version == Some(u64::from(MODEL_FORMAT_VERSION)),
            "unsupported model format version {version:?} (expected {MODEL_FORMAT_VERSION})"
        );
        Ok(serde_json::from_value(value)?)
    }
}

/// Table-style metrics for one evaluated model.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method: Method,
    pub n_test: usize,
    /// Test rows with a zero actual price, left out of the percentage errors.
    pub excluded_rows: usize,
    pub mean_error_pct: f64,
    pub max_error_pct: f64,
    /// Average band half-width in currency.
    pub sigma_avg: f64,
    pub train_seconds: f64,
    pub alphas: Option<Vec<f64>>,
    pub acceptance_rate: Option<f64>,
    pub pathology_count: Option<usize>,
}

impl EvaluationReport {
    pub fn key_values(&self) -> String {
        let mut s = String::new();
        let method = match self.method {
            Method::Ard => "ard",
            Method::Hmc => "hmc",
        };
        writeln!(s, "method={method}").unwrap();
        writeln!(s, "n_test={}", self.n_test).unwrap();
        writeln!(s, "excluded_rows={}", self.excluded_rows).unwrap();
        writeln!(s, "mean_error_pct={}", self.mean_error_pct).unwrap();
        writeln!(s, "max_error_pct={}", self.max_error_pct).unwrap();
        writeln!(s, "sigma_avg={}", self.sigma_avg).unwrap();
        writeln!(s, "train_seconds={}", self.train_seconds).unwrap();
        if let Some(a) = &self.alphas {
            let joined: Vec<String> = a.iter().map(f64::to_string).collect();
            writeln!(s, "alphas={}", joined.join(",")).unwrap();
        }
        if let Some(r) = self.acceptance_rate {
            writeln!(s, "acceptance_rate={r}").unwrap();
        }
        if let Some(c) = self.pathology_count {
            writeln!(s, "pathology_count={c}").unwrap();
        }
        s
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        writeln!(s, "Mean Error (%): {:.2}", self.mean_error_pct).unwrap();
        writeln!(s, "Max Error (%):  {:.2}", self.max_error_pct).unwrap();
        writeln!(s, "Time (s):       {:.2}", self.train_seconds).unwrap();
        writeln!(s, "sigma:          {:.4}", self.sigma_avg).unwrap();
        if let Some(a) = &self.alphas {
            let shown: Vec<String> = a.iter().map(|v| format!("{v:.4}")).collect();
            writeln!(s, "Alphas:         [{}]", shown.join(" ")).unwrap();
            if let Ok(ranked) = evidence::relevance_report(a, &FEATURE_NAMES) {
                let names: Vec<&str> = ranked.iter().map(|(n, _)| n.as_str()).collect();
                writeln!(s, "Relevance:      {}", names.join(" > ")).unwrap();
            }
        }
        if let Some(r) = self.acceptance_rate {
            writeln!(s, "Acceptance:     {r:.4}").unwrap();
        }
        if let Some(c) = self.pathology_count {
            writeln!(s, "Variances clamped to noise floor: {c}").unwrap();
        }
        if self.excluded_rows > 0 {
            writeln!(s, "({} zero-price rows excluded from % errors)", self.excluded_rows).unwrap();
        }
        s
    }
}

/// Percentage errors `|pred − actual| / actual × 100`: (mean, max, rows
/// skipped because `actual` is zero).
pub fn percentage_errors(actual: &[f64], predicted: &[f64]) -> (f64, f64, usize) {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut used = 0usize;
    for (&a, &p) in actual.iter().zip(predicted) {
        if a <= 0.0 {
            continue;
        }
        let e = (p - a).abs() / a * 100.0;
        sum += e;
        max = max.max(e);
        used += 1;
    }
    let mean = if used == 0 { f64::NAN } else { sum / used as f64 };
    (mean, max, actual.len() - used)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<String> {
    let cfg = args.config();
    let data = options::generate_dataset(&cfg)?;
    options::save_csv(&data, &args.out)?;
    Ok(format!("wrote {} rows to {} (seed {})\n", data.len(), args.out.display(), cfg.seed))
}

fn check_method_flags(args: &TrainArgs) -> Result<()> {
    let ard_only = [
        ("--cycles", args.cycles.is_some()),
        ("--evidence-cycles", args.evidence_cycles.is_some()),
        ("--loops", args.loops.is_some()),
    ];
    let hmc_only = [
        ("--samples", args.samples.is_some()),
        ("--burnin", args.burnin.is_some()),
        ("--step-size", args.step_size.is_some()),
        ("--traj-len", args.traj_len.is_some()),
    ];
    let (foreign, method) = match args.method {
        Method::Ard => (&hmc_only[..], "ard"),
        Method::Hmc => (&ard_only[..], "hmc"),
    };
    if let Some((flag, _)) = foreign.iter().find(|(_, set)| *set) {
        bail!("{flag} does not apply to --method {method}");
    }
    ensure!(args.hidden >= 1, "--hidden must be at least 1");
    ensure!(args.beta > 0.0, "--beta must be positive");
    ensure!(args.alpha > 0.0, "--alpha must be positive");
    ensure!(args.train >= 1, "--train must be at least 1");
    if let Some(s) = args.step_size {
        ensure!(s > 0.0 && s.is_finite(), "--step-size must be positive, got {s}");
    }
    for (flag, v) in [
        ("--cycles", args.cycles),
        ("--evidence-cycles", args.evidence_cycles),
        ("--loops", args.loops),
        ("--samples", args.samples),
        ("--traj-len", args.traj_len),
    ] {
        if v == Some(0) {
            bail!("{flag} must be at least 1");
        }
    }
    Ok(())
}

/// Trains per `args` and returns the artifact without writing it.
pub fn train(args: &TrainArgs) -> Result<ModelArtifact> {
    check_method_flags(args)?;
    let layout = NetworkLayout::new(3, args.hidden)?;
    let data = options::load_csv(&args.data)?;
    let (train, _) = options::split_and_normalize(&data, args.train, args.test, args.seed)?;
    let norm_stats = train.norm_stats.expect("split attaches statistics");
    let train_data = train.regression_data::<f64>()?;
    let hp = Hyperparameters::uniform(args.beta, args.alpha, layout.ard_group_count())?;
    let split = SplitSpec { n_train: args.train, n_test: args.test, seed: args.seed, source_rows: data.len() };

    let start = Instant::now();
    let model = match args.method {
        Method::Ard => {
            let cfg = ArdConfig {
                training_cycles: args.cycles.unwrap_or(500),
                evidence_cycles: args.evidence_cycles.unwrap_or(10),
                outer_loops: args.loops.unwrap_or(1),
                initial_hp: hp,
                seed: args.seed,
            };
            let m = evidence::train_map(&layout, &train_data, &cfg)?;
            ModelBody::Ard {
                weights: m.weights.values,
                hp: m.hp,
                hessian: m.hessian.as_slice().to_vec(),
                training_cycles: cfg.training_cycles,
                evidence_cycles: cfg.evidence_cycles,
                outer_loops: cfg.outer_loops,
            }
        }
        Method::Hmc => {
            let cfg = HmcConfig {
                step_size: args.step_size.unwrap_or(0.002),
                trajectory_length: args.traj_len.unwrap_or(DEFAULT_TRAJECTORY_LENGTH),
                n_samples: args.samples.unwrap_or(100),
                burn_in: args.burnin.unwrap_or(100),
                hp,
                seed: args.seed,
            };
            let chain = hmc::run_chain(&layout, &train_data, &cfg)?;
            ModelBody::Hmc {
                samples: chain.samples,
                hp: cfg.hp,
                accept_count: chain.accept_count,
                propose_count: chain.propose_count,
                step_size: cfg.step_size,
                trajectory_length: cfg.trajectory_length,
                burn_in: cfg.burn_in,
            }
        }
    };
    let train_seconds = start.elapsed().as_secs_f64();
    Ok(ModelArtifact { format_version: MODEL_FORMAT_VERSION, layout, split, norm_stats, train_seconds, model })
}

pub fn cmd_train(args: &TrainArgs) -> Result<String> {
    let artifact = train(args)?;
    artifact.save(&args.out)?;
    let mut s = format!("train_seconds={}\n", artifact.train_seconds);
    match &artifact.model {
        ModelBody::Ard { hp, .. } => {
            let a: Vec<String> = hp.alphas[..3].iter().map(|v| format!("{v:.4}")).collect();
            writeln!(s, "beta={:.4} alphas=[{}]", hp.beta, a.join(" ")).unwrap();
        }
        ModelBody::Hmc { accept_count, propose_count, .. } => {
            writeln!(s, "accepted {accept_count}/{propose_count} proposals").unwrap();
        }
    }
    writeln!(s, "model written to {}", args.out.display()).unwrap();
    Ok(s)
}

/// Per-point predictions on the test split, in currency units.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub actual: Vec<f64>,
    pub predictions: Vec<PredictiveResult<f64>>,
}

fn rescale(stats: &NormStats, p: &PredictiveResult<f64>) -> PredictiveResult<f64> {
    p.rescale(stats.target_mean, stats.target_std)
}

pub fn evaluate(artifact: &ModelArtifact, data: &Dataset) -> Result<Evaluation> {
    ensure!(
        artifact.layout.n_inputs == FEATURE_NAMES.len(),
        "model expects {} inputs, option data has {}",
        artifact.layout.n_inputs,
        FEATURE_NAMES.len()
    );
    ensure!(
        data.len() == artifact.split.source_rows,
        "model was trained on a {}-row data file, this one has {} rows",
        artifact.split.source_rows,
        data.len()
    );
    let split = artifact.split;
    let (train, mut test) = options::split_and_normalize(data, split.n_train, split.n_test, split.seed)?;
    ensure!(
        train.norm_stats == Some(artifact.norm_stats),
        "data file does not reproduce the model's training statistics"
    );
    test.norm_stats = Some(artifact.norm_stats);
    let x = test.regression_data::<f64>()?;
    let inputs: Vec<&[f64]> = (0..x.len()).map(|n| x.input(n)).collect();
    let stats = &artifact.norm_stats;

    let (normalized, alphas, acceptance_rate, pathology_count) = match &artifact.model {
        ModelBody::Ard { weights, hp, hessian, .. } => {
            let n = weights.len();
            let model = evidence::ArdModel {
                weights: NetworkWeights::from_values(artifact.layout, weights.clone())?,
                hp: hp.clone(),
                hessian: Matrix::from_row_major(n, hessian.clone())?,
                history: Vec::new(),
                train_seconds: artifact.train_seconds,
            };
            let ArdBatch { predictions, pathology_count } = model.predict_batch(inputs.iter().copied())?;
            (predictions, Some(model.input_alphas().to_vec()), None, Some(pathology_count))
        }
        ModelBody::Hmc { samples, accept_count, propose_count, .. } => {
            let chain = bnn_core::HmcChain {
                samples: samples.clone(),
                accept_count: *accept_count,
                propose_count: *propose_count,
                train_seconds: artifact.train_seconds,
            };
            let preds = hmc::predict_batch(&artifact.layout, &chain, &inputs)?;
            (preds, None, Some(chain.acceptance_rate()), None)
        }
    };
    let predictions: Vec<PredictiveResult<f64>> = normalized.iter().map(|p| rescale(stats, p)).collect();
    let actual = test.actual_prices();
    let means: Vec<f64> = predictions.iter().map(|p| p.mean).collect();
    let (mean_error_pct, max_error_pct, excluded_rows) = percentage_errors(&actual, &means);
    let sigma_avg = if predictions.is_empty() {
        0.0
    } else {
        predictions.iter().map(|p| p.sigma).sum::<f64>() / predictions.len() as f64
    };
    let report = EvaluationReport {
        method: artifact.method(),
        n_test: actual.len(),
        excluded_rows,
        mean_error_pct,
        max_error_pct,
        sigma_avg,
        train_seconds: artifact.train_seconds,
        alphas,
        acceptance_rate,
        pathology_count,
    };
    Ok(Evaluation { report, actual, predictions })
}

pub fn write_predictions(path: &Path, eval: &Evaluation, count: PlotCount) -> Result<()> {
    let n = match count {
        PlotCount::All => eval.actual.len(),
        PlotCount::First(k) => k.min(eval.actual.len()),
    };
    let mut s = String::from("index,actual,predicted,lower,upper\n");
    for (i, (a, p)) in eval.actual.iter().zip(&eval.predictions).take(n).enumerate() {
        writeln!(s, "{i},{a},{},{},{}", p.mean, p.lower, p.upper).unwrap();
    }
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<String> {
    let artifact = ModelArtifact::load(&args.model)?;
    let data = options::load_csv(&args.data)?;
    let eval = evaluate(&artifact, &data)?;
    if let Some(path) = &args.predictions {
        write_predictions(path, &eval, args.plot_count)?;
    }
    let kv = eval.report.key_values();
    if let Some(path) = &args.report {
        std::fs::write(path, &kv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(format!("{}\n{}", eval.report.human(), kv))
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}
