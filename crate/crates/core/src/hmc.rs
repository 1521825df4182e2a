//! Hybrid Monte Carlo over the network posterior.
//!
//! Each transition refreshes the momentum from `N(0, I)`, picks a direction
//! `λ ∈ {−1, +1}` with equal probability, integrates `L` leapfrog steps of
//! size `λε`, and applies a Metropolis test on the change in the
//! Hamiltonian `H(w, p) = E(w) + ½pᵀp`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{config, Error, Result};
use crate::mlp::{init_weights, NetworkLayout, NetworkWeights, RegressionData};
use crate::num::{all_finite, dot, Scalar};
use crate::predictive::PredictiveResult;
use crate::prior::{EnergyFunction, Hyperparameters, PosteriorTarget};

/// Default leapfrog steps per trajectory.
pub const DEFAULT_TRAJECTORY_LENGTH: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig<T> {
    pub step_size: T,
    pub trajectory_length: usize,
    pub n_samples: usize,
    /// Retained states discarded at the start of the chain.
    pub burn_in: usize,
    /// Only consulted by [`run_chain`]; [`sample`] takes its energy as given.
    pub hp: Hyperparameters<T>,
    pub seed: u64,
}

impl<T: Scalar> HmcConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > T::zero()) || !self.step_size.is_finite() {
            return Err(config(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.trajectory_length == 0 {
            return Err(config("trajectory length must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(config("sample count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcChain<T> {
    /// Post-burn-in positions, one per transition (repeats on rejection).
    pub samples: Vec<Vec<T>>,
    pub accept_count: usize,
    pub propose_count: usize,
    pub train_seconds: f64,
}

impl<T> HmcChain<T> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.propose_count == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.propose_count as f64
        }
    }
}

/// `E(w) + ½pᵀp`.
pub fn hamiltonian<T: Scalar, E: EnergyFunction<T>>(target: &E, w: &[T], p: &[T]) -> Result<T> {
    if w.len() != target.dim() {
        return Err(Error::Dimension { expected: target.dim(), found: w.len() });
    }
    if p.len() != w.len() {
        return Err(Error::Dimension { expected: w.len(), found: p.len() });
    }
    Ok(target.energy(w)? + T::of(0.5) * dot(p, p))
}

/// End point of a leapfrog trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub w: Vec<T>,
    pub p: Vec<T>,
    pub energy: T,
    pub gradient: Vec<T>,
}

/// `L` leapfrog steps of size `λε` from `(w, p)`.
///
/// `start_gradient` may carry `∇E(w)` from a previous evaluation; otherwise it
/// is computed. Returns `None` if the state stops being finite.
pub fn leapfrog_trajectory<T: Scalar, E: EnergyFunction<T>>(
    target: &E,
    start_w: &[T],
    start_p: &[T],
    direction: i8,
    step_size: T,
    steps: usize,
    start_gradient: Option<&[T]>,
) -> Result<Option<Trajectory<T>>> {
    if direction != 1 && direction != -1 {
        return Err(config("leapfrog direction must be +1 or -1"));
    }
    if start_p.len() != start_w.len() {
        return Err(Error::Dimension { expected: start_w.len(), found: start_p.len() });
    }
    let eps = step_size * T::of(f64::from(direction));
    let half = eps * T::of(0.5);

    let g0 = match start_gradient {
        Some(g) => g.to_vec(),
        None => target.gradient(start_w)?,
    };
    let mut w = start_w.to_vec();
    let mut p: Vec<T> = start_p.iter().zip(&g0).map(|(&pi, &gi)| pi - half * gi).collect();
    let mut energy = T::nan();
    let mut grad = g0;
    for step in 1..=steps {
        w.iter_mut().zip(&p).for_each(|(wi, &pi)| *wi += eps * pi);
        let (e, g) = match target.energy_and_gradient(&w) {
            Ok(eg) => eg,
            Err(Error::NonFinite(_)) => return Ok(None),
            Err(err) => return Err(err),
        };
        if !e.is_finite() || !all_finite(&g) {
            return Ok(None);
        }
        let kick = if step < steps { eps } else { half };
        p.iter_mut().zip(&g).for_each(|(pi, &gi)| *pi -= kick * gi);
        energy = e;
        grad = g;
    }
    if !all_finite(&p) || !all_finite(&w) {
        return Ok(None);
    }
    Ok(Some(Trajectory { w, p, energy, gradient: grad }))
}

/// Accept iff `u < min(1, exp(h_current − h_candidate))`; a non-finite
/// candidate is always rejected.
pub fn metropolis_accept<T: Scalar>(h_current: T, h_candidate: T, u: T) -> bool {
    if !h_candidate.is_finite() || !h_current.is_finite() {
        return false;
    }
    u < T::one().min((h_current - h_candidate).exp())
}

/// Runs a chain on an arbitrary energy from `initial`.
pub fn sample<T: Scalar, E: EnergyFunction<T>>(target: &E, initial: Vec<T>, cfg: &HmcConfig<T>) -> Result<HmcChain<T>> {
    cfg.validate()?;
    if initial.len() != target.dim() {
        return Err(Error::Dimension { expected: target.dim(), found: initial.len() });
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut w = initial;
    let (mut energy, mut grad) = target.energy_and_gradient(&w)?;
    if !energy.is_finite() || !all_finite(&grad) {
        return Err(Error::NonFinite("initial chain energy"));
    }

    let total = cfg.burn_in + cfg.n_samples;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut accept_count = 0;
    let half = T::of(0.5);
    for iteration in 0..total {
        let p: Vec<T> = (0..w.len())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::of(z)
            })
            .collect();
        let direction: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let u = T::of(rng.random::<f64>());

        let h_current = energy + half * dot(&p, &p);
        let proposal =
            leapfrog_trajectory(target, &w, &p, direction, cfg.step_size, cfg.trajectory_length, Some(&grad))?;
        if let Some(t) = proposal {
            let h_candidate = t.energy + half * dot(&t.p, &t.p);
            if metropolis_accept(h_current, h_candidate, u) {
                w = t.w;
                energy = t.energy;
                grad = t.gradient;
                accept_count += 1;
            }
        }
        if iteration >= cfg.burn_in {
            samples.push(w.clone());
        }
    }
    Ok(HmcChain { samples, accept_count, propose_count: total, train_seconds: start.elapsed().as_secs_f64() })
}

/// Samples the network posterior, starting from a prior draw.
pub fn run_chain<T: Scalar>(
    layout: &NetworkLayout,
    data: &RegressionData<T>,
    cfg: &HmcConfig<T>,
) -> Result<HmcChain<T>> {
    cfg.validate()?;
    cfg.hp.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let net = init_weights(layout, &cfg.hp, cfg.seed)?;
    let target = PosteriorTarget::new(&net, data, cfg.hp.clone())?;
    let mut chain = sample(&target, net.values.clone(), cfg)?;
    chain.train_seconds = start.elapsed().as_secs_f64();
    Ok(chain)
}

/// Average of the sampled networks' outputs with their population standard
/// deviation as the band half-width.
pub fn predictive_mean_std<T: Scalar>(
    layout: &NetworkLayout,
    chain: &HmcChain<T>,
    x: &[T],
) -> Result<PredictiveResult<T>> {
    if chain.samples.is_empty() {
        return Err(config("chain has no samples"));
    }
    let mut net = NetworkWeights::zeros(*layout)?;
    // Welford update
    let mut mean = T::zero();
    let mut m2 = T::zero();
    for (k, s) in chain.samples.iter().enumerate() {
        net.values.clone_from(s);
        let y = net.forward(x)?;
        let delta = y - mean;
        mean += delta / T::of((k + 1) as f64);
        m2 += delta * (y - mean);
    }
    let var = (m2 / T::of(chain.samples.len() as f64)).max(T::zero());
    Ok(PredictiveResult::new(mean, var.sqrt()))
}

pub fn predict_batch<T: Scalar>(
    layout: &NetworkLayout,
    chain: &HmcChain<T>,
    inputs: &[&[T]],
) -> Result<Vec<PredictiveResult<T>>> {
    inputs.par_iter().map(|x| predictive_mean_std(layout, chain, x)).collect()
}

/// Closed-form energies for checking the integrator and sampler.
pub mod reference {
    use super::*;

    /// `E(w) = ½ Σ w_i² / σ_i²`: a zero-mean Gaussian with the given variances.
    #[derive(Debug, Clone)]
    pub struct GaussianEnergy<T> {
        pub variances: Vec<T>,
    }

    impl<T: Scalar> GaussianEnergy<T> {
        pub fn standard(dim: usize) -> Self {
            Self { variances: vec![T::one(); dim] }
        }
    }

    impl<T: Scalar> EnergyFunction<T> for GaussianEnergy<T> {
        fn dim(&self) -> usize {
            self.variances.len()
        }
        fn energy(&self, w: &[T]) -> Result<T> {
            Ok(w.iter().zip(&self.variances).map(|(&x, &v)| T::of(0.5) * x * x / v).sum())
        }
        fn gradient(&self, w: &[T]) -> Result<Vec<T>> {
            Ok(w.iter().zip(&self.variances).map(|(&x, &v)| x / v).collect())
        }
    }

    /// Flat energy: a free particle.
    #[derive(Debug, Clone)]
    pub struct ConstantEnergy<T> {
        pub dim: usize,
        pub level: T,
    }

    impl<T: Scalar> EnergyFunction<T> for ConstantEnergy<T> {
        fn dim(&self) -> usize {
            self.dim
        }
        fn energy(&self, _: &[T]) -> Result<T> {
            Ok(self.level)
        }
        fn gradient(&self, _: &[T]) -> Result<Vec<T>> {
            Ok(vec![T::zero(); self.dim])
        }
    }
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use super::reference::*;
    use super::*;

    fn cfg(step: f64, l: usize, n: usize, burn: usize, seed: u64) -> HmcConfig<f64> {
        HmcConfig {
            step_size: step,
            trajectory_length: l,
            n_samples: n,
            burn_in: burn,
            hp: Hyperparameters::uniform(10.0, 1.0, 1).unwrap(),
            seed,
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let t = GaussianEnergy::<f64>::standard(2);
        assert_eq!(hamiltonian(&t, &[0.3, -0.4], &[0.0, 0.0]).unwrap(), t.energy(&[0.3, -0.4]).unwrap());
        assert_eq!(hamiltonian(&t, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(hamiltonian(&t, &[0.0, 0.0], &[1.0]).is_err());
    }

    #[test]
    fn free_particle_moves_linearly() {
        let t = ConstantEnergy { dim: 2, level: 3.0 };
        let (w, p) = ([0.5, -1.0], [0.2, 0.7]);
        for dir in [1i8, -1] {
            let out = leapfrog_trajectory(&t, &w, &p, dir, 0.01, 40, None).unwrap().unwrap();
            for k in 0..2 {
                let want = w[k] + f64::from(dir) * 0.01 * 40.0 * p[k];
                assert!((out.w[k] - want).abs() < 1e-13);
                assert_eq!(out.p[k], p[k]);
            }
        }
    }

    struct Counting<'a> {
        inner: GaussianEnergy<f64>,
        calls: &'a Cell<usize>,
    }

    impl EnergyFunction<f64> for Counting<'_> {
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn energy(&self, w: &[f64]) -> Result<f64> {
            self.inner.energy(w)
        }
        fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
            self.calls.set(self.calls.get() + 1);
            self.inner.gradient(w)
        }
    }

    #[test]
    fn gradient_evaluation_count() {
        let calls = Cell::new(0);
        let t = Counting { inner: GaussianEnergy::standard(3), calls: &calls };
        leapfrog_trajectory(&t, &[0.1, 0.2, 0.3], &[1.0, 0.0, -1.0], 1, 0.1, 17, None).unwrap().unwrap();
        assert_eq!(calls.get(), 18);
    }

    #[test]
    fn reversibility() {
        let t = GaussianEnergy { variances: vec![1.0, 0.25, 4.0] };
        let (w, p) = ([0.3, -0.8, 1.5], [1.1, 0.4, -0.6]);
        for dir in [1i8, -1] {
            let fwd = leapfrog_trajectory(&t, &w, &p, dir, 0.05, 60, None).unwrap().unwrap();
            let neg: Vec<f64> = fwd.p.iter().map(|v| -v).collect();
            let back = leapfrog_trajectory(&t, &fwd.w, &neg, dir, 0.05, 60, None).unwrap().unwrap();
            for k in 0..3 {
                assert!((back.w[k] - w[k]).abs() < 1e-10);
                assert!((back.p[k] + p[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn metropolis_examples() {
        for u in [0.0, 0.3, 0.999_999] {
            assert!(metropolis_accept(4.0, 4.0, u));
            assert!(metropolis_accept(4.0, -1.0, u));
        }
        let h = 1.5;
        assert!(metropolis_accept(h, h + 2f64.ln(), 0.49));
        assert!(!metropolis_accept(h, h + 2f64.ln(), 0.51));
        assert!(!metropolis_accept(h, f64::NAN, 0.0));
        assert!(!metropolis_accept(h, f64::INFINITY, 0.0));
    }

    struct Blowup;

    impl EnergyFunction<f64> for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, w: &[f64]) -> Result<f64> {
            Ok(if w[0].abs() > 1.0 { f64::INFINITY } else { 0.5 * w[0] * w[0] })
        }
        fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![w[0]])
        }
    }

    #[test]
    fn non_finite_trajectory_is_rejected_not_fatal() {
        assert!(leapfrog_trajectory(&Blowup, &[0.0], &[100.0], 1, 0.1, 5, None).unwrap().is_none());
        let chain = sample(&Blowup, vec![0.0], &cfg(5.0, 3, 20, 0, 1)).unwrap();
        assert_eq!(chain.samples.len(), 20);
        assert!(chain.accept_count < chain.propose_count);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        assert!(sample(&Blowup, vec![5.0], &cfg(0.1, 3, 5, 0, 1)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.0, 5, 5, 0, 0).validate().is_err());
        assert!(cfg(0.1, 0, 5, 0, 0).validate().is_err());
        assert!(cfg(0.1, 5, 0, 0, 0).validate().is_err());
        assert!(cfg(0.1, 5, 1, 0, 0).validate().is_ok());
    }

    #[test]
    fn chain_is_deterministic_and_sized() {
        let t = GaussianEnergy::standard(3);
        let a = sample(&t, vec![1.0; 3], &cfg(0.2, 10, 50, 25, 9)).unwrap();
        let b = sample(&t, vec![1.0; 3], &cfg(0.2, 10, 50, 25, 9)).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples.len(), 50);
        assert_eq!(a.propose_count, 75);
        assert!(a.accept_count <= a.propose_count);
    }

    #[test]
    fn predictive_examples() {
        let layout = NetworkLayout::new(1, 1).unwrap();
        let x = [0.4];
        // output bias only: outputs 0 and 2
        let chain = HmcChain {
            samples: vec![vec![0.0f64, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 2.0]],
            accept_count: 1,
            propose_count: 2,
            train_seconds: 0.0,
        };
        let r = predictive_mean_std(&layout, &chain, &x).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-15 && (r.sigma - 1.0).abs() < 1e-15);

        let same = HmcChain { samples: vec![vec![0.5, 0.1, 1.2, -0.3]; 7], ..chain.clone() };
        let r = predictive_mean_std(&layout, &same, &x).unwrap();
        let net = NetworkWeights::from_values(layout, vec![0.5, 0.1, 1.2, -0.3]).unwrap();
        assert_eq!(r.sigma, 0.0);
        assert!((r.mean - net.forward(&x).unwrap()).abs() < 1e-15);
    }
}
