//! Scaled conjugate gradient minimisation (Møller's algorithm).

use crate::error::{Error, Result};
use crate::num::{dot, Scalar};
use crate::prior::EnergyFunction;

#[derive(Debug, Clone, Copy)]
pub struct ScgOptions {
    pub max_iterations: usize,
    /// Stop once a successful step moves every coordinate less than this...
    pub x_tolerance: f64,
    /// ...and changes the energy by less than this.
    pub f_tolerance: f64,
}

impl ScgOptions {
    pub fn with_iterations(max_iterations: usize) -> Self {
        Self { max_iterations, x_tolerance: 1e-10, f_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct ScgOutcome<T> {
    pub x: Vec<T>,
    pub energy: T,
    pub iterations: usize,
}

fn axpy<T: Scalar>(x: &[T], a: T, d: &[T]) -> Vec<T> {
    x.iter().zip(d).map(|(&xi, &di)| xi + a * di).collect()
}

fn finite_energy<T: Scalar, F: EnergyFunction<T>>(f: &F, x: &[T], iteration: usize) -> Result<T> {
    match f.energy(x) {
        Ok(e) if e.is_finite() => Ok(e),
        Ok(_) | Err(Error::NonFinite(_)) => Err(Error::Divergence { iteration }),
        Err(e) => Err(e),
    }
}

fn finite_gradient<T: Scalar, F: EnergyFunction<T>>(f: &F, x: &[T], iteration: usize) -> Result<Vec<T>> {
    let g = f.gradient(x)?;
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::Divergence { iteration })
    }
}

/// Minimises `f` from `x0`. Deterministic: no randomness is involved.
pub fn scaled_conjugate_gradient<T: Scalar, F: EnergyFunction<T>>(
    f: &F,
    x0: Vec<T>,
    opts: ScgOptions,
) -> Result<ScgOutcome<T>> {
    let sigma0 = T::of(1e-4);
    let beta_min = T::of(1e-15);
    let beta_max = T::of(1e100);
    let n = x0.len();

    let mut x = x0;
    let mut f_old = finite_energy(f, &x, 0)?;
    let mut f_now = f_old;
    let mut grad_new = finite_gradient(f, &x, 0)?;
    let mut grad_old = grad_new.clone();
    let mut d: Vec<T> = grad_new.iter().map(|&g| -g).collect();
    let mut success = true;
    let mut n_success = 0usize;
    let mut beta = T::one();
    let (mut mu, mut kappa, mut theta) = (T::zero(), T::zero(), T::zero());

    let mut j = 1;
    while j <= opts.max_iterations {
        if success {
            mu = dot(&d, &grad_new);
            if mu >= T::zero() {
                d = grad_new.iter().map(|&g| -g).collect();
                mu = dot(&d, &grad_new);
            }
            kappa = dot(&d, &d);
            if kappa < T::epsilon() {
                return Ok(ScgOutcome { x, energy: f_now, iterations: j - 1 });
            }
            let sigma = sigma0 / kappa.sqrt();
            let g_plus = finite_gradient(f, &axpy(&x, sigma, &d), j)?;
            theta =
                d.iter().zip(g_plus.iter().zip(&grad_new)).map(|(&di, (&gp, &gn))| di * (gp - gn)).sum::<T>() / sigma;
        }

        let mut delta = theta + beta * kappa;
        if delta <= T::zero() {
            delta = beta * kappa;
            beta -= theta / kappa;
        }
        let alpha = -mu / delta;

        let x_new = axpy(&x, alpha, &d);
        let f_new = finite_energy(f, &x_new, j)?;
        let comparison = T::of(2.0) * (f_new - f_old) / (alpha * mu);
        if comparison >= T::zero() {
            success = true;
            n_success += 1;
            x = x_new;
            f_now = f_new;
        } else {
            success = false;
            f_now = f_old;
        }

        if success {
            let step = d.iter().fold(T::zero(), |m, &di| m.max((alpha * di).abs()));
            if step < T::of(opts.x_tolerance) && (f_new - f_old).abs() < T::of(opts.f_tolerance) {
                return Ok(ScgOutcome { x, energy: f_new, iterations: j });
            }
            f_old = f_new;
            grad_old = grad_new;
            grad_new = finite_gradient(f, &x, j)?;
            if dot(&grad_new, &grad_new) == T::zero() {
                return Ok(ScgOutcome { x, energy: f_new, iterations: j });
            }
        }

        if comparison < T::of(0.25) {
            beta = (T::of(4.0) * beta).min(beta_max);
        }
        if comparison > T::of(0.75) {
            beta = (T::of(0.5) * beta).max(beta_min);
        }

        if n_success == n {
            d = grad_new.iter().map(|&g| -g).collect();
            n_success = 0;
        } else if success {
            let gamma = grad_old.iter().zip(&grad_new).map(|(&o, &nw)| (o - nw) * nw).sum::<T>() / mu;
            d = d.iter().zip(&grad_new).map(|(&di, &g)| gamma * di - g).collect();
        }
        j += 1;
    }
    Ok(ScgOutcome { x, energy: f_now, iterations: opts.max_iterations })
}
