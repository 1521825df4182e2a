//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bnn_cli::{evaluate, percentage_errors, ModelArtifact, ModelBody};
use bnn_core::evidence::{train_map, ArdConfig, ArdModel};
use bnn_core::hmc::reference::GaussianEnergy;
use bnn_core::hmc::{hamiltonian, leapfrog_trajectory, sample, HmcConfig};
use bnn_core::mlp::{NetworkLayout, NetworkWeights, RegressionData, WeightGroups};
use bnn_core::options::{
    binomial_american_call, black_scholes_call, generate_dataset, load_csv, split_and_normalize, GeneratorConfig,
};
use bnn_core::prior::{log_prior, posterior_energy, posterior_energy_gradient, Hyperparameters};
use bnn_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---- 1. gradients ----

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

fn worst_relative(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(1e-3f64, |m, g| m.max(g.abs()));
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(scale)).fold(0.0, f64::max)
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 150;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n_in = rng.random_range(1..=3);
        let layout = NetworkLayout::new(n_in, rng.random_range(1..=5)).unwrap();
        let n_points = rng.random_range(1..=10);
        let values = (0..layout.weight_count()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let net = NetworkWeights::from_values(layout, values).unwrap();
        let inputs = (0..n_in * n_points).map(|_| rng.random_range(-2.0..2.0)).collect();
        let targets = (0..n_points).map(|_| rng.random_range(-2.0..2.0)).collect();
        let data = RegressionData::new(n_in, inputs, targets).unwrap();
        let alphas = (0..layout.ard_group_count()).map(|_| rng.random_range(0.01..5.0)).collect();
        let hp = Hyperparameters::new(rng.random_range(0.1..20.0), alphas).unwrap();

        let ed = central_difference(|w| net.with_values(w.to_vec()).data_error(&data).unwrap(), &net.values);
        worst = worst.max(worst_relative(&net.data_error_gradient(&data).unwrap(), &ed));
        let post = central_difference(
            |w| posterior_energy(&net.with_values(w.to_vec()), &data, &hp).unwrap().total,
            &net.values,
        );
        worst = worst.max(worst_relative(&posterior_energy_gradient(&net, &data, &hp).unwrap(), &post));
    }
    check(worst <= 1e-5, format!("{trials} instances x 2 gradients, worst relative error {worst:.2e}"))
}

// ---- 2. prior normalization ----

fn prior_normalization() -> Outcome {
    let groups = WeightGroups::from_labels(vec![0, 1]).unwrap();
    let hp = Hyperparameters::<f64>::new(1.0, vec![0.5, 3.0]).unwrap();
    let half: Vec<f64> = hp.alphas.iter().map(|a| 8.0 / a.sqrt()).collect();
    let volume = 4.0 * half[0] * half[1];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let w = [rng.random_range(-half[0]..half[0]), rng.random_range(-half[1]..half[1])];
        sum += log_prior(&w, &groups, &hp).unwrap().exp();
    }
    let mass = volume * sum / n as f64;
    check((mass - 1.0).abs() <= 0.02, format!("Monte Carlo mass {mass:.4} at 1e6 samples"))
}

// ---- 3. leapfrog physics ----

fn max_drift(step: f64, steps: usize) -> f64 {
    let target = GaussianEnergy::<f64>::standard(1);
    let (w, p) = ([1.0], [0.5]);
    let h0 = hamiltonian(&target, &w, &p).unwrap();
    (1..=steps)
        .map(|l| {
            let t = leapfrog_trajectory(&target, &w, &p, 1, step, l, None).unwrap().unwrap();
            (hamiltonian(&target, &t.w, &t.p).unwrap() - h0).abs()
        })
        .fold(0.0, f64::max)
}

fn hmc_physics() -> Outcome {
    let target = GaussianEnergy::<f64>::standard(3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut reversal = 0.0f64;
    for _ in 0..50 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fwd = leapfrog_trajectory(&target, &w, &p, 1, 0.05, 40, None).unwrap().unwrap();
        let neg: Vec<f64> = fwd.p.iter().map(|v| -v).collect();
        let back = leapfrog_trajectory(&target, &fwd.w, &neg, 1, 0.05, 40, None).unwrap().unwrap();
        for k in 0..3 {
            reversal = reversal.max((back.w[k] - w[k]).abs()).max((back.p[k] + p[k]).abs());
        }
    }
    let coarse = max_drift(0.01, 100);
    let fine = max_drift(0.005, 200);
    let ratio = coarse / fine;
    check(
        reversal <= 1e-10 && coarse <= 1e-4 && ratio >= 3.5,
        format!("reversal error {reversal:.1e}, drift {coarse:.2e} at eps 0.01, halving ratio {ratio:.2}"),
    )
}

// ---- 4. sampler moments ----

fn hmc_gaussian() -> Outcome {
    let cfg = HmcConfig {
        step_size: 0.1,
        trajectory_length: 20,
        n_samples: 5000,
        burn_in: 500,
        hp: Hyperparameters::uniform(1.0, 1.0, 1).unwrap(),
        seed: 42,
    };
    let chain = sample(&GaussianEnergy::<f64>::standard(2), vec![0.0, 0.0], &cfg).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..2 {
        let xs: Vec<f64> = chain.samples.iter().map(|s| s[k]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        ok &= mean.abs() <= 0.1 && (var - 1.0).abs() <= 0.1;
        parts.push(format!("x{k}: mean {mean:+.3} var {var:.3}"));
    }
    check(ok, format!("{}, acceptance {:.3}", parts.join("; "), chain.acceptance_rate()))
}

// ---- 5. relevance ----

fn ard_relevance() -> Outcome {
    let gen = GeneratorConfig { n_rows: 1000, tree_steps: 100, seed: 17, ..Default::default() };
    let data = generate_dataset(&gen).map_err(|e| e.to_string())?;
    let (train, _) = split_and_normalize(&data, 1000, 0, 17).map_err(|e| e.to_string())?;
    let base = train.regression_data::<f64>().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut inputs = Vec::new();
    for n in 0..base.len() {
        inputs.extend_from_slice(base.input(n));
        inputs.push(rng.sample::<f64, _>(StandardNormal));
    }
    let data = RegressionData::new(4, inputs, base.targets().to_vec()).unwrap();
    let cfg = ArdConfig {
        training_cycles: 500,
        evidence_cycles: 10,
        outer_loops: 2,
        initial_hp: Hyperparameters::uniform(10.0, 1.0, 6).unwrap(),
        seed: 5,
    };
    let model = train_map(&NetworkLayout::new(4, 10).unwrap(), &data, &cfg).map_err(|e| e.to_string())?;
    let a = model.input_alphas();
    let smallest = a[..3].iter().copied().fold(f64::INFINITY, f64::min);
    let largest_relevant = a[..3].iter().copied().fold(0.0, f64::max);
    check(
        a[3] > largest_relevant && a[3] >= 5.0 * smallest,
        format!(
            "alphas [{:.3} {:.3} {:.3} | noise {:.3e}], noise/smallest {:.1}",
            a[0],
            a[1],
            a[2],
            a[3],
            a[3] / smallest
        ),
    )
}

// ---- CLI runs shared by 6, 7, 9, 10 ----

const ARD_FLAGS: &[&str] = &[
    "--method",
    "ard",
    "--hidden",
    "50",
    "--beta",
    "10",
    "--cycles",
    "500",
    "--evidence-cycles",
    "10",
    "--loops",
    "1",
];
const HMC_FLAGS: &[&str] =
    &["--method", "hmc", "--hidden", "10", "--samples", "100", "--burnin", "100", "--step-size", "0.002"];
const DATA_SEED: &str = "7";

struct Workspace {
    dir: PathBuf,
}

struct Run {
    model: PathBuf,
    report: PathBuf,
    predictions: PathBuf,
    stdout: String,
    train_time: Duration,
}

fn bnn(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bnn")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("bnn {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

impl Workspace {
    fn data(&self, tag: &str) -> PathBuf {
        self.dir.join(format!("options_{tag}.csv"))
    }

    fn generate(&self, tag: &str) -> Result<PathBuf, String> {
        let path = self.data(tag);
        bnn(&["generate", "--seed", DATA_SEED, "--out", p(&path)])?;
        Ok(path)
    }

    fn train_and_evaluate(&self, data: &Path, flags: &[&str], tag: &str) -> Result<Run, String> {
        let model = self.dir.join(format!("{tag}.json"));
        let report = self.dir.join(format!("{tag}.report"));
        let predictions = self.dir.join(format!("{tag}.csv"));
        let mut args = vec!["train", "--data", p(data), "--out", p(&model), "--seed", "3"];
        args.extend_from_slice(flags);
        let start = Instant::now();
        bnn(&args)?;
        let train_time = start.elapsed();
        let stdout = bnn(&[
            "evaluate",
            "--model",
            p(&model),
            "--data",
            p(data),
            "--report",
            p(&report),
            "--predictions",
            p(&predictions),
            "--plot-count",
            "all",
        ])?;
        Ok(Run { model, report, predictions, stdout, train_time })
    }
}

fn report_field(run: &Run, key: &str) -> Option<String> {
    std::fs::read_to_string(&run.report)
        .ok()?
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_owned))
}

// ---- 6. learning signal ----

fn learning_signal(data: &Path, ard: &Run, hmc: &Run) -> Outcome {
    let dataset = load_csv(data).map_err(|e| e.to_string())?;
    let (train, test) = split_and_normalize(&dataset, 1000, 300, 3).map_err(|e| e.to_string())?;
    let train_prices = train.actual_prices();
    let mean = train_prices.iter().sum::<f64>() / train_prices.len() as f64;
    let actual = test.actual_prices();
    let (baseline, _, _) = percentage_errors(&actual, &vec![mean; actual.len()]);
    let ard_err: f64 =
        report_field(ard, "mean_error_pct").and_then(|v| v.parse().ok()).ok_or("missing ard mean_error_pct")?;
    let hmc_err: f64 =
        report_field(hmc, "mean_error_pct").and_then(|v| v.parse().ok()).ok_or("missing hmc mean_error_pct")?;
    let ok = ard_err <= 0.5 * baseline
        && hmc_err <= 0.5 * baseline
        && ard.train_time < Duration::from_secs(300)
        && hmc.train_time < Duration::from_secs(600);
    check(
        ok,
        format!(
            "baseline {baseline:.2}%, ard {ard_err:.2}% ({:.1}s), hmc {hmc_err:.2}% ({:.1}s)",
            ard.train_time.as_secs_f64(),
            hmc.train_time.as_secs_f64()
        ),
    )
}

// ---- 7. band ordering ----

fn band_ordering(data: &Path, runs: &[&Run]) -> Outcome {
    let dataset = load_csv(data).map_err(|e| e.to_string())?;
    let mut checked = 0usize;
    for run in runs {
        let artifact = ModelArtifact::load(&run.model).map_err(|e| e.to_string())?;
        let eval = evaluate(&artifact, &dataset).map_err(|e| e.to_string())?;
        for pr in &eval.predictions {
            if !(pr.lower <= pr.mean && pr.mean <= pr.upper) {
                return Err(format!("band out of order: {pr:?}"));
            }
        }
        let text = std::fs::read_to_string(&run.predictions).map_err(|e| e.to_string())?;
        for line in text.lines().skip(1) {
            let f: Vec<f64> = line.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
            if !(f[1] <= f[0] && f[0] <= f[2]) {
                return Err(format!("predictions file row out of order: {line}"));
            }
        }
        checked += eval.predictions.len();
        if let ModelBody::Ard { weights, hp, hessian, .. } = &artifact.model {
            let model = ArdModel {
                weights: NetworkWeights::from_values(artifact.layout, weights.clone()).unwrap(),
                hp: hp.clone(),
                hessian: Matrix::from_row_major(weights.len(), hessian.clone()).unwrap(),
                history: Vec::new(),
                train_seconds: 0.0,
            };
            let (_, test) = split_and_normalize(&dataset, 1000, 300, 3).unwrap();
            let x = test.regression_data::<f64>().unwrap();
            let floor = (1.0 / hp.beta).sqrt();
            for n in 0..x.len() {
                let s = model.predict_with_error_bars(x.input(n)).unwrap().result.sigma;
                if !(s.is_finite() && s >= floor - 1e-12) {
                    return Err(format!("trained model sigma {s} below noise floor {floor}"));
                }
            }
        }
    }
    // random models with arbitrary, often indefinite, Hessians
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut clamps = 0usize;
    for _ in 0..200 {
        let layout = NetworkLayout::new(3, rng.random_range(1..=4)).unwrap();
        let w = layout.weight_count();
        let values = (0..w).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut h = Matrix::zeros(w);
        for i in 0..w {
            for j in 0..=i {
                let v = rng.random_range(-1.0..1.0) + if i == j { rng.random_range(-1.0..3.0) } else { 0.0 };
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let beta = rng.random_range(0.1..100.0);
        let model = ArdModel {
            weights: NetworkWeights::from_values(layout, values).unwrap(),
            hp: Hyperparameters::uniform(beta, 1.0, layout.ard_group_count()).unwrap(),
            hessian: h,
            history: Vec::new(),
            train_seconds: 0.0,
        };
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pr = model.predict_with_error_bars(&x).map_err(|e| e.to_string())?;
        let floor = (1.0 / beta).sqrt();
        if !(pr.result.sigma.is_finite() && pr.result.sigma >= floor - 1e-12) {
            return Err(format!("sigma {} below floor {floor}", pr.result.sigma));
        }
        clamps += usize::from(pr.clamped);
    }
    Ok(format!(
        "{checked} test points ordered, trained and 200 random models respect the noise floor ({clamps} clamped)"
    ))
}

// ---- 8. pricing oracles ----

fn quadrature_call(s: f64, k: f64, r: f64, vol: f64, t: f64) -> f64 {
    let drift = (r - 0.5 * vol * vol) * t;
    let scale = vol * t.sqrt();
    let a = (((k / s).ln() - drift) / scale).max(-12.0);
    let b = 12.0;
    if a >= b {
        return 0.0;
    }
    let n = 20_000;
    let h = (b - a) / n as f64;
    let f = |z: f64| {
        (s * (drift + scale * z).exp() - k).max(0.0) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (-r * t).exp() * sum * h / 3.0
}

fn option_oracle() -> Outcome {
    let (mut tree_gap, mut quad_gap) = (0.0f64, 0.0f64);
    for k in [80.0, 90.0, 100.0, 110.0, 120.0] {
        for v in [0.1, 0.2, 0.3, 0.4, 0.5] {
            for t in [0.1, 0.25, 0.5, 1.0, 2.0] {
                let bs = black_scholes_call(100.0, k, 0.05, v, t).map_err(|e| e.to_string())?;
                let tree = binomial_american_call(100.0, k, 0.05, v, t, 0.0, 1000).map_err(|e| e.to_string())?;
                tree_gap = tree_gap.max((tree - bs).abs());
                quad_gap = quad_gap.max((bs - quadrature_call(100.0, k, 0.05, v, t)).abs());
            }
        }
    }
    check(
        tree_gap <= 0.05 && quad_gap <= 1e-4,
        format!("125-point grid: max |tree - closed| {tree_gap:.4}, max |closed - quadrature| {quad_gap:.1e}"),
    )
}

// ---- 9. determinism ----

fn strip_timing_json(path: &Path) -> Result<serde_json::Value, String> {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    v["train_seconds"] = serde_json::Value::Null;
    Ok(v)
}

fn strip_timing_report(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    Ok(text.lines().filter(|l| !l.starts_with("train_seconds=")).collect::<Vec<_>>().join("\n"))
}

fn determinism(ws: &Workspace, first: (&Path, &Run, &Run)) -> Outcome {
    let data2 = ws.generate("second")?;
    let same_data =
        std::fs::read(first.0).map_err(|e| e.to_string())? == std::fs::read(&data2).map_err(|e| e.to_string())?;
    let ard2 = ws.train_and_evaluate(&data2, ARD_FLAGS, "ard_second")?;
    let hmc2 = ws.train_and_evaluate(&data2, HMC_FLAGS, "hmc_second")?;
    let mut diffs = Vec::new();
    if !same_data {
        diffs.push("generate");
    }
    for (name, a, b) in [("ard", first.1, &ard2), ("hmc", first.2, &hmc2)] {
        if strip_timing_json(&a.model)? != strip_timing_json(&b.model)? {
            diffs.push(if name == "ard" { "ard model" } else { "hmc model" });
        }
        if strip_timing_report(&a.report)? != strip_timing_report(&b.report)? {
            diffs.push(if name == "ard" { "ard report" } else { "hmc report" });
        }
        if std::fs::read(&a.predictions).ok() != std::fs::read(&b.predictions).ok() {
            diffs.push(if name == "ard" { "ard predictions" } else { "hmc predictions" });
        }
    }
    // evaluate is a pure function of its inputs, timing line included
    let rerun = ws.dir.join("ard_rerun.report");
    bnn(&["evaluate", "--model", p(&first.1.model), "--data", p(first.0), "--report", p(&rerun)])?;
    if std::fs::read(&rerun).ok() != std::fs::read(&first.1.report).ok() {
        diffs.push("evaluate rerun");
    }
    check(
        diffs.is_empty(),
        if diffs.is_empty() {
            "generate, train (ard, hmc) and evaluate identical across two runs (wall-clock timing excluded)".into()
        } else {
            format!("differences in: {}", diffs.join(", "))
        },
    )
}

// ---- 10. protocol shape ----

fn protocol_shape(ard: &Run, hmc: &Run) -> Outcome {
    let mut missing = Vec::new();
    for (run, keys, labels) in [
        (
            ard,
            &["mean_error_pct", "max_error_pct", "train_seconds", "sigma_avg", "alphas"][..],
            &["Mean Error", "Max Error", "Time", "sigma", "Alphas"][..],
        ),
        (
            hmc,
            &["mean_error_pct", "max_error_pct", "train_seconds", "sigma_avg", "acceptance_rate"][..],
            &["Mean Error", "Max Error", "Time", "sigma", "Acceptance"][..],
        ),
    ] {
        for k in keys {
            match report_field(run, k) {
                Some(v) if v.split(',').all(|x| x.parse::<f64>().map(f64::is_finite).unwrap_or(false)) => {}
                _ => missing.push(format!("{k} (report)")),
            }
        }
        for l in labels {
            if !run.stdout.contains(l) {
                missing.push(format!("{l} (text)"));
            }
        }
    }
    let alphas = report_field(ard, "alphas").unwrap_or_default();
    let rate = report_field(hmc, "acceptance_rate").unwrap_or_default();
    check(
        missing.is_empty() && alphas.split(',').count() == 3,
        if missing.is_empty() {
            format!("ard alphas [{alphas}], hmc acceptance {rate}")
        } else {
            format!("missing: {}", missing.join(", "))
        },
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let ws = Workspace { dir: tmp.path().to_path_buf() };
    let mut results: Vec<(u32, &str, Option<Duration>, Outcome, Duration)> = Vec::new();
    let mut timed = |id: u32, name: &'static str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        results.push((id, name, limit, outcome, start.elapsed()));
    };

    timed(1, "gradient correctness", Some(Duration::from_secs(10)), &mut gradients);
    timed(2, "prior normalization", Some(Duration::from_secs(10)), &mut prior_normalization);
    timed(3, "leapfrog physics", Some(Duration::from_secs(5)), &mut hmc_physics);
    timed(4, "sampler on 2-D Gaussian", Some(Duration::from_secs(30)), &mut hmc_gaussian);
    timed(5, "ARD flags the noise input", None, &mut ard_relevance);

    let runs = ws.generate("first").and_then(|data| {
        let ard = ws.train_and_evaluate(&data, ARD_FLAGS, "ard_first")?;
        let hmc = ws.train_and_evaluate(&data, HMC_FLAGS, "hmc_first")?;
        Ok((data, ard, hmc))
    });
    match &runs {
        Ok((data, ard, hmc)) => {
            timed(6, "learning signal vs constant baseline", None, &mut || learning_signal(data, ard, hmc));
            timed(7, "band ordering and noise floor", None, &mut || band_ordering(data, &[ard, hmc]));
        }
        Err(e) => {
            timed(6, "learning signal vs constant baseline", None, &mut || Err(e.clone()));
            timed(7, "band ordering and noise floor", None, &mut || Err(e.clone()));
        }
    }
    timed(8, "option pricing oracles", Some(Duration::from_secs(30)), &mut option_oracle);
    match &runs {
        Ok((data, ard, hmc)) => {
            timed(9, "determinism", None, &mut || determinism(&ws, (data, ard, hmc)));
            timed(10, "protocol reproduction", None, &mut || protocol_shape(ard, hmc));
        }
        Err(e) => {
            timed(9, "determinism", None, &mut || Err(e.clone()));
            timed(10, "protocol reproduction", None, &mut || Err(e.clone()));
        }
    }

    let mut failed = 0;
    for (id, name, limit, outcome, elapsed) in results {
        let over = limit.is_some_and(|l| elapsed > l);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => {
                ("FAIL", format!("{d}; took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.unwrap().as_secs_f64()))
            }
            (Err(d), _) => ("FAIL", d.clone()),
        };
        failed += usize::from(status == "FAIL");
        println!("criterion {id:>2} {status}: {name}: {detail} [{:.2}s]", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
