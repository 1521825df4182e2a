//! Gaussian-approximation backend: MAP training, evidence re-estimation of
//! `(β, α)`, ARD relevance, and error-bar prediction.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{config, Error, Result};
use crate::linalg::{LuFactors, Matrix, SymmetricEigen};
use crate::mlp::{init_weights, NetworkLayout, NetworkWeights, RegressionData, WeightGroups};
use crate::num::Scalar;
use crate::optim::{scaled_conjugate_gradient, ScgOptions};
use crate::predictive::PredictiveResult;
use crate::prior::{Hyperparameters, PosteriorTarget};

/// Re-estimated hyperparameters are clamped to `[HP_MIN, HP_MAX]`.
pub const HP_MIN: f64 = 1e-6;
pub const HP_MAX: f64 = 1e6;
/// Eigenvalues of the posterior Hessian are floored here before inversion.
pub const EIGEN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ArdConfig<T> {
    pub training_cycles: usize,
    pub evidence_cycles: usize,
    pub outer_loops: usize,
    pub initial_hp: Hyperparameters<T>,
    pub seed: u64,
}

impl<T: Scalar> ArdConfig<T> {
    /// 500 optimiser cycles, 10 evidence cycles, one outer loop.
    pub fn new(initial_hp: Hyperparameters<T>, seed: u64) -> Self {
        Self { training_cycles: 500, evidence_cycles: 10, outer_loops: 1, initial_hp, seed }
    }

    pub fn validate(&self, layout: &NetworkLayout) -> Result<()> {
        if self.training_cycles == 0 || self.evidence_cycles == 0 || self.outer_loops == 0 {
            return Err(config("training, evidence and outer loop counts must all be at least 1"));
        }
        self.initial_hp.validate_for(&WeightGroups::ard(layout))
    }
}

/// State after one outer loop (optimise, then re-estimate).
#[derive(Debug, Clone, PartialEq)]
pub struct LoopRecord<T> {
    pub weights: Vec<T>,
    pub hp: Hyperparameters<T>,
    pub data_error: T,
}

#[derive(Debug, Clone)]
pub struct ArdModel<T> {
    /// MAP estimate.
    pub weights: NetworkWeights<T>,
    pub hp: Hyperparameters<T>,
    /// Posterior-energy Hessian `β·∇²E_D + diag(α)` at `weights`.
    pub hessian: Matrix<T>,
    pub history: Vec<LoopRecord<T>>,
    pub train_seconds: f64,
}

/// Central differences of the exact data-error gradient, symmetrized.
pub fn data_error_hessian<T: Scalar>(net: &NetworkWeights<T>, data: &RegressionData<T>) -> Result<Matrix<T>> {
    let n = net.len();
    let h = T::hessian_step();
    let two_h = h + h;
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut plus = net.values.clone();
            plus[i] += h;
            let mut minus = net.values.clone();
            minus[i] -= h;
            let gp = net.with_values(plus).data_error_gradient(data)?;
            let gm = net.with_values(minus).data_error_gradient(data)?;
            Ok(gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / two_h).collect())
        })
        .collect::<Result<_>>()?;
    let mut m = Matrix::zeros(n);
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m.symmetrize();
    if !m.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("data-error Hessian"));
    }
    Ok(m)
}

/// `β·H_D + diag(α_{g(i)})`.
pub fn posterior_hessian<T: Scalar>(
    data_hessian: &Matrix<T>,
    groups: &WeightGroups,
    hp: &Hyperparameters<T>,
) -> Matrix<T> {
    let n = data_hessian.dim();
    let scaled: Vec<T> = data_hessian.as_slice().iter().map(|&v| hp.beta * v).collect();
    let mut a = Matrix::from_row_major(n, scaled).expect("square");
    for i in 0..n {
        a[(i, i)] += hp.alphas[groups.group_of(i)];
    }
    a
}

fn clamp_hp<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        return T::of(HP_MAX);
    }
    v.max(T::of(HP_MIN)).min(T::of(HP_MAX))
}

/// Well-determined parameter count per group,
/// `γ_g = |g| − α_g · Σ_{i∈g} (A⁻¹)_ii`, with `A⁻¹` formed from the floored
/// eigendecomposition of the posterior Hessian `A`.
pub fn effective_parameters<T: Scalar>(
    data_hessian: &Matrix<T>,
    groups: &WeightGroups,
    hp: &Hyperparameters<T>,
) -> Result<Vec<T>> {
    let a = posterior_hessian(data_hessian, groups, hp);
    let eig = SymmetricEigen::new(&a)?;
    let floor = T::of(EIGEN_FLOOR);
    let inv: Vec<T> = eig.values.iter().map(|&l| T::one() / l.max(floor)).collect();
    let n = a.dim();
    let mut trace = vec![T::zero(); groups.count()];
    for i in 0..n {
        let row = eig.vectors.row(i);
        let diag: T = row.iter().zip(&inv).map(|(&v, &s)| v * v * s).sum();
        trace[groups.group_of(i)] += diag;
    }
    Ok((0..groups.count()).map(|g| T::of(groups.size(g) as f64) - hp.alphas[g] * trace[g]).collect())
}

/// One evidence re-estimate from precomputed pieces:
/// `α_g ← γ_g / (2 E_{W,g})`, `β ← (N − Σγ) / (2 E_D)`, clamped.
pub fn reestimate_from_parts<T: Scalar>(
    values: &[T],
    groups: &WeightGroups,
    data_error: T,
    n_data: usize,
    data_hessian: &Matrix<T>,
    hp: &Hyperparameters<T>,
) -> Result<Hyperparameters<T>> {
    hp.validate_for(groups)?;
    if data_hessian.dim() != values.len() {
        return Err(Error::Dimension { expected: values.len(), found: data_hessian.dim() });
    }
    let gamma = effective_parameters(data_hessian, groups, hp)?;
    let ew = groups.half_square_norms(values);
    let two = T::of(2.0);
    let alphas = gamma
        .iter()
        .zip(&ew)
        .map(|(&gm, &e)| if e == T::zero() { T::of(HP_MAX) } else { clamp_hp(gm / (two * e)) })
        .collect();
    let total_gamma: T = gamma.iter().copied().sum();
    let beta = if data_error == T::zero() {
        T::of(HP_MAX)
    } else {
        clamp_hp((T::of(n_data as f64) - total_gamma) / (two * data_error))
    };
    Ok(Hyperparameters { beta, alphas })
}

pub fn reestimate_hyperparameters<T: Scalar>(
    net: &NetworkWeights<T>,
    data: &RegressionData<T>,
    data_hessian: &Matrix<T>,
    hp: &Hyperparameters<T>,
) -> Result<Hyperparameters<T>> {
    let ed = net.data_error(data)?;
    reestimate_from_parts(&net.values, &net.groups, ed, data.len(), data_hessian, hp)
}

/// Runs `outer_loops` rounds of (MAP optimisation, evidence re-estimation).
pub fn train_map<T: Scalar>(
    layout: &NetworkLayout,
    data: &RegressionData<T>,
    cfg: &ArdConfig<T>,
) -> Result<ArdModel<T>> {
    layout.validate()?;
    cfg.validate(layout)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let mut net = init_weights(layout, &cfg.initial_hp, cfg.seed)?;
    let mut hp = cfg.initial_hp.clone();
    let mut history = Vec::with_capacity(cfg.outer_loops);
    let mut data_hessian = Matrix::zeros(net.len());

    for outer in 0..cfg.outer_loops {
        let target = PosteriorTarget::new(&net, data, hp.clone())?;
        let out =
            scaled_conjugate_gradient(&target, net.values.clone(), ScgOptions::with_iterations(cfg.training_cycles))
                .map_err(|e| match e {
                    Error::Divergence { iteration } => {
                        Error::Divergence { iteration: outer * cfg.training_cycles + iteration }
                    }
                    other => other,
                })?;
        net = net.with_values(out.x);

        data_hessian = data_error_hessian(&net, data)?;
        let ed = net.data_error(data)?;
        for _ in 0..cfg.evidence_cycles {
            hp = reestimate_from_parts(&net.values, &net.groups, ed, data.len(), &data_hessian, &hp)?;
        }
        history.push(LoopRecord { weights: net.values.clone(), hp: hp.clone(), data_error: ed });
    }

    let hessian = posterior_hessian(&data_hessian, &net.groups, &hp);
    Ok(ArdModel { weights: net, hp, hessian, history, train_seconds: start.elapsed().as_secs_f64() })
}

/// One error-bar prediction, with the raw variance before any clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArdPrediction<T> {
    pub result: PredictiveResult<T>,
    pub raw_variance: T,
    /// Variance fell below the noise floor `1/β` (indefinite H) and was replaced by it.
    pub clamped: bool,
}

/// Batch of predictions plus the number of variance clamps.
#[derive(Debug, Clone)]
pub struct ArdBatch<T> {
    pub predictions: Vec<PredictiveResult<T>>,
    pub pathology_count: usize,
}

impl<T: Scalar> ArdModel<T> {
    fn factor_hessian(&self) -> Result<LuFactors<T>> {
        match LuFactors::new(&self.hessian) {
            Ok(lu) => Ok(lu),
            Err(Error::Singular) => {
                // lift near-zero eigenvalues off zero, keeping their sign
                let eig = SymmetricEigen::new(&self.hessian)?;
                let floor = T::of(EIGEN_FLOOR);
                let n = self.hessian.dim();
                let lifted: Vec<T> = eig
                    .values
                    .iter()
                    .map(|&l| {
                        if l.abs() < floor {
                            if l < T::zero() {
                                -floor
                            } else {
                                floor
                            }
                        } else {
                            l
                        }
                    })
                    .collect();
                let mut rebuilt = Matrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        rebuilt[(i, j)] = (0..n).map(|k| eig.vectors[(i, k)] * lifted[k] * eig.vectors[(j, k)]).sum();
                    }
                }
                LuFactors::new(&rebuilt)
            }
            Err(e) => Err(e),
        }
    }

    fn predict_factored(&self, lu: &LuFactors<T>, x: &[T]) -> Result<ArdPrediction<T>> {
        let mean = self.weights.forward(x)?;
        let g = self.weights.output_gradient(x)?;
        let hinv_g = lu.solve(&g)?;
        let noise = T::one() / self.hp.beta;
        let raw = noise + crate::num::dot(&g, &hinv_g);
        if !raw.is_finite() {
            return Err(Error::NonFinite("predictive variance"));
        }
        // an indefinite H can push the variance below the noise floor, or negative
        let clamped = raw < noise;
        let variance = if clamped { noise } else { raw };
        Ok(ArdPrediction { result: PredictiveResult::new(mean, variance.sqrt()), raw_variance: raw, clamped })
    }

    /// `mean = f(x; w_MP)`, `variance = 1/β + gᵀH⁻¹g` with `g = ∂f/∂w`.
    pub fn predict_with_error_bars(&self, x: &[T]) -> Result<ArdPrediction<T>> {
        let lu = self.factor_hessian()?;
        self.predict_factored(&lu, x)
    }

    pub fn predict_batch<'a, I>(&self, inputs: I) -> Result<ArdBatch<T>>
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        let lu = self.factor_hessian()?;
        let mut predictions = Vec::new();
        let mut pathology_count = 0;
        for x in inputs {
            let p = self.predict_factored(&lu, x)?;
            pathology_count += usize::from(p.clamped);
            predictions.push(p.result);
        }
        Ok(ArdBatch { predictions, pathology_count })
    }

    /// The per-input `α` values (first `n_inputs` groups).
    pub fn input_alphas(&self) -> &[T] {
        &self.hp.alphas[..self.weights.layout.n_inputs]
    }
}

/// Inputs ranked most relevant first (ascending `α`, ties keep input order).
pub fn relevance_report<T: Scalar>(input_alphas: &[T], input_names: &[&str]) -> Result<Vec<(String, T)>> {
    if input_alphas.len() < input_names.len() {
        return Err(Error::Dimension { expected: input_names.len(), found: input_alphas.len() });
    }
    let mut ranked: Vec<(String, T)> = input_names.iter().zip(input_alphas).map(|(n, &a)| (n.to_string(), a)).collect();
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ranked)
}
