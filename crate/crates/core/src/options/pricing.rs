use statrs::function::erf::erfc;

use crate::error::{config, Result};

/// Day-count used to turn maturities in days into years.
pub const DAYS_PER_YEAR: f64 = 365.0;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn check_inputs(spot: f64, strike: f64, rate: f64, volatility: f64, maturity_years: f64) -> Result<()> {
    if ![spot, strike, rate, volatility, maturity_years].iter().all(|v| v.is_finite()) {
        return Err(config("option parameters must be finite"));
    }
    if maturity_years < 0.0 {
        return Err(config(format!("maturity must be non-negative, got {maturity_years}")));
    }
    if spot <= 0.0 || strike <= 0.0 {
        return Err(config("spot and strike must be positive"));
    }
    if maturity_years > 0.0 && volatility <= 0.0 {
        return Err(config("volatility must be positive"));
    }
    Ok(())
}

/// European call on a non-dividend asset.
pub fn black_scholes_call(spot: f64, strike: f64, rate: f64, volatility: f64, maturity_years: f64) -> Result<f64> {
    black_scholes_call_with_yield(spot, strike, rate, volatility, maturity_years, 0.0)
}

/// European call with a continuous dividend yield `q`:
/// `S·e^{−qT}·Φ(d₁) − K·e^{−rT}·Φ(d₂)`.
pub fn black_scholes_call_with_yield(
    spot: f64,
    strike: f64,
    rate: f64,
    volatility: f64,
    maturity_years: f64,
    dividend_yield: f64,
) -> Result<f64> {
    check_inputs(spot, strike, rate, volatility, maturity_years)?;
    if maturity_years == 0.0 {
        return Ok((spot - strike).max(0.0));
    }
    let sqrt_t = maturity_years.sqrt();
    let d1 = ((spot / strike).ln() + (rate - dividend_yield + 0.5 * volatility * volatility) * maturity_years)
        / (volatility * sqrt_t);
    let d2 = d1 - volatility * sqrt_t;
    let price = spot * (-dividend_yield * maturity_years).exp() * normal_cdf(d1)
        - strike * (-rate * maturity_years).exp() * normal_cdf(d2);
    Ok(price.max(0.0))
}

/// Cox–Ross–Rubinstein tree with early exercise checked at every node.
pub fn binomial_american_call(
    spot: f64,
    strike: f64,
    rate: f64,
    volatility: f64,
    maturity_years: f64,
    dividend_yield: f64,
    steps: usize,
) -> Result<f64> {
    check_inputs(spot, strike, rate, volatility, maturity_years)?;
    if steps == 0 {
        return Err(config("binomial tree needs at least one step"));
    }
    if maturity_years == 0.0 {
        return Ok((spot - strike).max(0.0));
    }
    let dt = maturity_years / steps as f64;
    let u = (volatility * dt.sqrt()).exp();
    let d = 1.0 / u;
    let p = (((rate - dividend_yield) * dt).exp() - d) / (u - d);
    if !(0.0..=1.0).contains(&p) {
        return Err(config(format!("risk-neutral probability {p} outside [0, 1]; use more steps")));
    }
    let disc = (-rate * dt).exp();
    let (pu, pd) = (disc * p, disc * (1.0 - p));

    // spot · u^k for k = -steps..=steps
    let powers: Vec<f64> = (0..=2 * steps).map(|k| spot * u.powi(k as i32 - steps as i32)).collect();
    let node = |i: usize, j: usize| powers[steps + 2 * j - i];

    let mut values: Vec<f64> = (0..=steps).map(|j| (node(steps, j) - strike).max(0.0)).collect();
    for i in (0..steps).rev() {
        for j in 0..=i {
            let cont = pu * values[j + 1] + pd * values[j];
            values[j] = cont.max(node(i, j) - strike);
        }
    }
    Ok(values[0])
}
