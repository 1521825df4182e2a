use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pricing::{binomial_american_call, DAYS_PER_YEAR};
use crate::error::{config, Error, Result};
use crate::mlp::RegressionData;
use crate::num::Scalar;

pub const CSV_HEADER: [&str; 6] = ["volatility", "strike", "maturity_days", "high", "low", "call_price"];
pub const FEATURE_NAMES: [&str; 3] = ["volatility", "strike", "maturity"];

/// One quoted call with its day's high/low; the target is their midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub volatility: f64,
    pub strike: f64,
    pub maturity_days: f64,
    pub high_price: f64,
    pub low_price: f64,
    pub call_price: f64,
}

impl OptionQuote {
    pub fn from_band(volatility: f64, strike: f64, maturity_days: f64, high_price: f64, low_price: f64) -> Self {
        Self { volatility, strike, maturity_days, high_price, low_price, call_price: (high_price + low_price) / 2.0 }
    }

    pub fn features(&self) -> [f64; 3] {
        [self.volatility, self.strike, self.maturity_days]
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let all = [self.volatility, self.strike, self.maturity_days, self.high_price, self.low_price, self.call_price];
        if !all.iter().all(|v| v.is_finite()) {
            return Err("non-finite value".into());
        }
        if self.volatility <= 0.0 {
            return Err(format!("volatility must be positive, got {}", self.volatility));
        }
        if self.strike <= 0.0 {
            return Err(format!("strike must be positive, got {}", self.strike));
        }
        if self.maturity_days < 0.0 {
            return Err(format!("maturity must be non-negative, got {}", self.maturity_days));
        }
        if self.low_price < 0.0 || self.high_price < 0.0 || self.call_price < 0.0 {
            return Err("prices must be non-negative".into());
        }
        let mid = (self.high_price + self.low_price) / 2.0;
        if (self.call_price - mid).abs() > 1e-9 * mid.abs().max(1.0) {
            return Err(format!("call_price {} is not the midpoint of high and low", self.call_price));
        }
        if self.low_price > self.call_price || self.call_price > self.high_price {
            return Err("call_price must lie between low and high".into());
        }
        Ok(())
    }
}

/// Standardization statistics, fitted on training rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_mean: [f64; 3],
    pub feature_std: [f64; 3],
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = if n > 1 { values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

impl NormStats {
    /// Sample mean and (n − 1) standard deviation; a constant column gets
    /// unit scale.
    pub fn fit(rows: &[OptionQuote]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut feature_mean = [0.0; 3];
        let mut feature_std = [0.0; 3];
        for k in 0..3 {
            (feature_mean[k], feature_std[k]) = mean_std(rows.iter().map(move |r| r.features()[k]));
        }
        let (target_mean, target_std) = mean_std(rows.iter().map(|r| r.call_price));
        Ok(Self { feature_mean, feature_std, target_mean, target_std })
    }

    pub fn normalize_features(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| (x[k] - self.feature_mean[k]) / self.feature_std[k])
    }

    pub fn denormalize_features(&self, z: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| z[k] * self.feature_std[k] + self.feature_mean[k])
    }

    pub fn normalize_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn denormalize_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }
}

/// Quotes in currency units plus, once split, the training-set statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<OptionQuote>,
    pub norm_stats: Option<NormStats>,
}

impl Dataset {
    pub fn new(rows: Vec<OptionQuote>) -> Self {
        Self { rows, norm_stats: None }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.norm_stats.is_some()
    }

    pub fn actual_prices(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.call_price).collect()
    }

    /// Standardized inputs and targets for the network.
    pub fn regression_data<T: Scalar>(&self) -> Result<RegressionData<T>> {
        let stats = self.norm_stats.ok_or_else(|| config("dataset has no normalization statistics"))?;
        let mut inputs = Vec::with_capacity(3 * self.len());
        let mut targets = Vec::with_capacity(self.len());
        for r in &self.rows {
            inputs.extend(stats.normalize_features(r.features()).iter().map(|&v| T::of(v)));
            targets.push(T::of(stats.normalize_target(r.call_price)));
        }
        RegressionData::new(3, inputs, targets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_rows: usize,
    pub spot: f64,
    pub rate: f64,
    pub dividend_yield: f64,
    pub volatility_range: (f64, f64),
    pub strike_range: (f64, f64),
    /// Whole days, inclusive.
    pub maturity_range: (f64, f64),
    /// Half-width of the high/low band as a fraction of the mid price.
    pub spread_fraction: f64,
    /// Std of the additive Gaussian noise on the mid price.
    pub noise_std: f64,
    pub tree_steps: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_rows: 3051,
            spot: 100.0,
            rate: 0.05,
            dividend_yield: 0.03,
            volatility_range: (0.2, 0.5),
            strike_range: (85.0, 115.0),
            maturity_range: (60.0, 365.0),
            spread_fraction: 0.05,
            noise_std: 0.01,
            tree_steps: 500,
            seed: 0,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(config(format!("{name} range must be positive and non-degenerate, got [{lo}, {hi}]")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(config("row count must be at least 1"));
        }
        if !(self.spot > 0.0) || !self.rate.is_finite() || !self.dividend_yield.is_finite() {
            return Err(config("spot must be positive and rates finite"));
        }
        check_range("volatility", self.volatility_range)?;
        check_range("strike", self.strike_range)?;
        check_range("maturity", self.maturity_range)?;
        if !(0.0..0.5).contains(&self.spread_fraction) {
            return Err(config(format!("spread fraction must be in [0, 0.5), got {}", self.spread_fraction)));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(config("noise std must be non-negative"));
        }
        if self.tree_steps == 0 {
            return Err(config("tree steps must be at least 1"));
        }
        Ok(())
    }

    fn row(&self, index: usize) -> Result<OptionQuote> {
        // independent stream per row so parallel and serial runs agree
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let volatility = rng.random_range(self.volatility_range.0..=self.volatility_range.1);
        let strike = rng.random_range(self.strike_range.0..=self.strike_range.1);
        let lo_day = self.maturity_range.0.ceil() as u64;
        let hi_day = (self.maturity_range.1.floor() as u64).max(lo_day);
        let maturity_days = rng.random_range(lo_day..=hi_day) as f64;
        let noise = if self.noise_std > 0.0 {
            Normal::new(0.0, self.noise_std).expect("valid std").sample(&mut rng)
        } else {
            0.0
        };

        let model = binomial_american_call(
            self.spot,
            strike,
            self.rate,
            volatility,
            maturity_days / DAYS_PER_YEAR,
            self.dividend_yield,
            self.tree_steps,
        )?;
        let mid = (model + noise).max(0.0);
        let high = mid * (1.0 + self.spread_fraction);
        let low = mid * (1.0 - self.spread_fraction);
        Ok(OptionQuote::from_band(volatility, strike, maturity_days, high, low))
    }
}

/// Draws `n_rows` quotes, priced on the American binomial tree.
pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let rows: Vec<OptionQuote> = (0..cfg.n_rows).into_par_iter().map(|i| cfg.row(i)).collect::<Result<_>>()?;
    if rows.iter().all(|r| r.call_price == 0.0) {
        return Err(config("every generated price floored to zero; check the generator ranges"));
    }
    Ok(Dataset::new(rows))
}

/// Shuffles by `seed`, takes `n_train` then `n_test` rows, and attaches
/// statistics fitted on the training rows to both parts.
pub fn split_and_normalize(data: &Dataset, n_train: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if n_train == 0 {
        return Err(config("training split must be non-empty"));
    }
    if n_train + n_test > data.len() {
        return Err(config(format!(
            "need {} rows for a {n_train}/{n_test} split, dataset has {}",
            n_train + n_test,
            data.len()
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_rows: Vec<OptionQuote> = order[..n_train].iter().map(|&i| data.rows[i]).collect();
    let test_rows: Vec<OptionQuote> = order[n_train..n_train + n_test].iter().map(|&i| data.rows[i]).collect();
    let stats = NormStats::fit(&train_rows)?;
    Ok((Dataset { rows: train_rows, norm_stats: Some(stats) }, Dataset { rows: test_rows, norm_stats: Some(stats) }))
}

/// Writes quotes with round-trip-exact decimal representation.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in &data.rows {
        w.write_record(
            [r.volatility, r.strike, r.maturity_days, r.high_price, r.low_price, r.call_price].map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };
        if record.len() != CSV_HEADER.len() {
            return Err(parse_err(format!("expected {} fields, found {}", CSV_HEADER.len(), record.len())));
        }
        let mut v = [0.0; 6];
        for (k, field) in record.iter().enumerate() {
            v[k] = field.trim().parse::<f64>().map_err(|e| parse_err(format!("column `{}`: {e}", CSV_HEADER[k])))?;
        }
        let quote = OptionQuote {
            volatility: v[0],
            strike: v[1],
            maturity_days: v[2],
            high_price: v[3],
            low_price: v[4],
            call_price: v[5],
        };
        quote.validate().map_err(parse_err)?;
        rows.push(quote);
    }
    Ok(Dataset::new(rows))
}
