//! Gaussian weight prior, per-group hyperparameters, and the posterior
//! energy `E(w) = β·E_D + Σ_g α_g·E_{W,g}` shared by both backends.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::mlp::{NetworkWeights, RegressionData, WeightGroups};
use crate::num::Scalar;

/// `β` (data-error coefficient) and one prior inverse variance per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Hyperparameters<T> {
    pub beta: T,
    pub alphas: Vec<T>,
}

impl<T: Scalar> Hyperparameters<T> {
    pub fn new(beta: T, alphas: Vec<T>) -> Result<Self> {
        let hp = Self { beta, alphas };
        hp.validate()?;
        Ok(hp)
    }

    /// Same `α` for all `g` groups.
    pub fn uniform(beta: T, alpha: T, g: usize) -> Result<Self> {
        Self::new(beta, vec![alpha; g])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return Err(config(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > T::zero()) || !a.is_finite()) {
            return Err(config(format!("every alpha must be positive and finite, got {a}")));
        }
        Ok(())
    }

    pub fn validate_for(&self, groups: &WeightGroups) -> Result<()> {
        self.validate()?;
        self.check_group_count(groups)
    }

    fn check_group_count(&self, groups: &WeightGroups) -> Result<()> {
        if self.alphas.len() != groups.count() {
            return Err(Error::Dimension { expected: groups.count(), found: self.alphas.len() });
        }
        Ok(())
    }
}

/// Posterior energy split into its likelihood and prior parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorEnergy<T> {
    pub total: T,
    /// `β·E_D`
    pub data_term: T,
    /// `Σ_g α_g·E_{W,g}`
    pub prior_term: T,
}

fn prior_term<T: Scalar>(values: &[T], groups: &WeightGroups, alphas: &[T]) -> T {
    groups.half_square_norms(values).into_iter().zip(alphas).map(|(e, &a)| a * e).sum()
}

/// `ln p(w)` under independent per-group Gaussians, normaliser included:
/// `−Σ_g [α_g·E_{W,g} + (|g|/2)·ln(2π/α_g)]`.
///
/// Unlike the energy functions, `β` is ignored and zero `α` is rejected.
pub fn log_prior<T: Scalar>(values: &[T], groups: &WeightGroups, hp: &Hyperparameters<T>) -> Result<T> {
    hp.check_group_count(groups)?;
    if values.len() != groups.len() {
        return Err(Error::Dimension { expected: groups.len(), found: values.len() });
    }
    if let Some(a) = hp.alphas.iter().find(|a| !(**a > T::zero())) {
        return Err(config(format!("alpha must be positive, got {a}")));
    }
    let two_pi = T::of(2.0 * PI);
    let half = T::of(0.5);
    let log_norm: T =
        hp.alphas.iter().enumerate().map(|(g, &a)| half * T::of(groups.size(g) as f64) * (two_pi / a).ln()).sum();
    Ok(-(prior_term(values, groups, &hp.alphas) + log_norm))
}

fn check_energy_args<T: Scalar>(net: &NetworkWeights<T>, hp: &Hyperparameters<T>) -> Result<()> {
    hp.check_group_count(&net.groups)?;
    // β = 0 and α = 0 are allowed here: they switch a term off.
    if hp.beta < T::zero() || hp.alphas.iter().any(|&a| a < T::zero()) {
        return Err(config("hyperparameters must be non-negative"));
    }
    Ok(())
}

pub fn posterior_energy<T: Scalar>(
    net: &NetworkWeights<T>,
    data: &RegressionData<T>,
    hp: &Hyperparameters<T>,
) -> Result<PosteriorEnergy<T>> {
    check_energy_args(net, hp)?;
    let data_term = hp.beta * net.data_error(data)?;
    let prior_term = prior_term(&net.values, &net.groups, &hp.alphas);
    Ok(PosteriorEnergy { total: data_term + prior_term, data_term, prior_term })
}

/// Component `i` in group `g`: `β·∂E_D/∂w_i + α_g·w_i`.
pub fn posterior_energy_gradient<T: Scalar>(
    net: &NetworkWeights<T>,
    data: &RegressionData<T>,
    hp: &Hyperparameters<T>,
) -> Result<Vec<T>> {
    posterior_energy_and_gradient(net, data, hp).map(|(_, g)| g)
}

pub fn posterior_energy_and_gradient<T: Scalar>(
    net: &NetworkWeights<T>,
    data: &RegressionData<T>,
    hp: &Hyperparameters<T>,
) -> Result<(PosteriorEnergy<T>, Vec<T>)> {
    check_energy_args(net, hp)?;
    let (ed, mut grad) = net.data_error_and_gradient(data)?;
    for (i, g) in grad.iter_mut().enumerate() {
        *g = hp.beta * *g + hp.alphas[net.groups.group_of(i)] * net.values[i];
    }
    let data_term = hp.beta * ed;
    let prior_term = prior_term(&net.values, &net.groups, &hp.alphas);
    Ok((PosteriorEnergy { total: data_term + prior_term, data_term, prior_term }, grad))
}

/// A differentiable potential energy over a flat parameter vector.
pub trait EnergyFunction<T: Scalar> {
    fn dim(&self) -> usize;

    fn energy(&self, w: &[T]) -> Result<T>;

    fn gradient(&self, w: &[T]) -> Result<Vec<T>>;

    fn energy_and_gradient(&self, w: &[T]) -> Result<(T, Vec<T>)> {
        Ok((self.energy(w)?, self.gradient(w)?))
    }
}

/// The network posterior energy for fixed data and hyperparameters.
#[derive(Debug, Clone)]
pub struct PosteriorTarget<'a, T> {
    template: NetworkWeights<T>,
    data: &'a RegressionData<T>,
    hp: Hyperparameters<T>,
}

impl<'a, T: Scalar> PosteriorTarget<'a, T> {
    pub fn new(template: &NetworkWeights<T>, data: &'a RegressionData<T>, hp: Hyperparameters<T>) -> Result<Self> {
        check_energy_args(template, &hp)?;
        if data.n_features() != template.layout.n_inputs {
            return Err(Error::Dimension { expected: template.layout.n_inputs, found: data.n_features() });
        }
        Ok(Self { template: template.clone(), data, hp })
    }

    pub fn net(&self, w: &[T]) -> NetworkWeights<T> {
        self.template.with_values(w.to_vec())
    }

    pub fn hyperparameters(&self) -> &Hyperparameters<T> {
        &self.hp
    }
}

impl<T: Scalar> EnergyFunction<T> for PosteriorTarget<'_, T> {
    fn dim(&self) -> usize {
        self.template.len()
    }

    fn energy(&self, w: &[T]) -> Result<T> {
        Ok(posterior_energy(&self.net(w), self.data, &self.hp)?.total)
    }

    fn gradient(&self, w: &[T]) -> Result<Vec<T>> {
        posterior_energy_gradient(&self.net(w), self.data, &self.hp)
    }

    fn energy_and_gradient(&self, w: &[T]) -> Result<(T, Vec<T>)> {
        let (e, g) = posterior_energy_and_gradient(&self.net(w), self.data, &self.hp)?;
        Ok((e.total, g))
    }
}
