//! One-hidden-layer tanh/linear perceptron for scalar regression.
//!
//! Weights live in one flat vector laid out as
//! `[input→hidden (input-major) | hidden biases | hidden→output | output bias]`,
//! so the fan-out of input `i` occupies the contiguous block
//! `i·H .. (i+1)·H` where `H` is the hidden-unit count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::num::{all_finite, Scalar};
use crate::prior::Hyperparameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HiddenActivation {
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputActivation {
    Linear,
}

/// Shape of a single-output MLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
}

impl NetworkLayout {
    pub fn new(n_inputs: usize, n_hidden: usize) -> Result<Self> {
        let layout = Self {
            n_inputs,
            n_hidden,
            n_outputs: 1,
            hidden_activation: HiddenActivation::Tanh,
            output_activation: OutputActivation::Linear,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.n_hidden == 0 {
            return Err(config("network needs at least one input and one hidden unit"));
        }
        if self.n_outputs != 1 {
            return Err(config("only single-output networks are supported"));
        }
        Ok(())
    }

    /// `W = (n_inputs + 1)·n_hidden + (n_hidden + 1)·n_outputs`.
    pub fn weight_count(&self) -> usize {
        (self.n_inputs + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_outputs
    }

    /// Number of ARD groups: one per input, one for hidden biases plus
    /// hidden→output weights, one for the output bias.
    pub fn ard_group_count(&self) -> usize {
        self.n_inputs + 2
    }

    fn hidden_bias_offset(&self) -> usize {
        self.n_inputs * self.n_hidden
    }

    fn output_weight_offset(&self) -> usize {
        self.hidden_bias_offset() + self.n_hidden
    }

    fn output_bias_index(&self) -> usize {
        self.output_weight_offset() + self.n_hidden
    }
}

/// Partition of weight indices into disjoint non-empty groups, one
/// hyperparameter per group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightGroups {
    group_of: Vec<usize>,
    sizes: Vec<usize>,
}

impl WeightGroups {
    /// Builds from a per-weight group label. Labels must be `0..g` with every
    /// label used at least once.
    pub fn from_labels(group_of: Vec<usize>) -> Result<Self> {
        let g = group_of.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0; g];
        for &l in &group_of {
            sizes[l] += 1;
        }
        if sizes.contains(&0) {
            return Err(config("weight groups must be non-empty"));
        }
        Ok(Self { group_of, sizes })
    }

    pub fn single(n_weights: usize) -> Self {
        Self { group_of: vec![0; n_weights], sizes: vec![n_weights] }
    }

    pub fn ard(layout: &NetworkLayout) -> Self {
        let h = layout.n_hidden;
        let mut labels = Vec::with_capacity(layout.weight_count());
        for i in 0..layout.n_inputs {
            labels.extend(std::iter::repeat_n(i, h));
        }
        labels.extend(std::iter::repeat_n(layout.n_inputs, 2 * h));
        labels.push(layout.n_inputs + 1);
        Self::from_labels(labels).expect("ARD grouping is a valid partition")
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    pub fn size(&self, g: usize) -> usize {
        self.sizes[g]
    }

    #[inline]
    pub fn group_of(&self, index: usize) -> usize {
        self.group_of[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.group_of
    }

    /// `½ Σ_{i∈g} w_i²` for every group.
    pub fn half_square_norms<T: Scalar>(&self, values: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.count()];
        for (&l, &w) in self.group_of.iter().zip(values) {
            out[l] += w * w;
        }
        let half = T::of(0.5);
        out.iter_mut().for_each(|x| *x *= half);
        out
    }
}

/// Flat weight vector plus the layout and group partition it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct NetworkWeights<T> {
    pub layout: NetworkLayout,
    pub values: Vec<T>,
    pub groups: WeightGroups,
}

/// Row-major inputs with scalar targets, already on the model's scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData<T> {
    n_features: usize,
    inputs: Vec<T>,
    targets: Vec<T>,
}

impl<T: Scalar> RegressionData<T> {
    pub fn new(n_features: usize, inputs: Vec<T>, targets: Vec<T>) -> Result<Self> {
        if n_features == 0 {
            return Err(config("regression data needs at least one feature"));
        }
        if inputs.len() != n_features * targets.len() {
            return Err(Error::Dimension { expected: n_features * targets.len(), found: inputs.len() });
        }
        if !all_finite(&inputs) || !all_finite(&targets) {
            return Err(Error::NonFinite("regression data"));
        }
        Ok(Self { n_features, inputs, targets })
    }

    pub fn from_rows(rows: &[Vec<T>], targets: Vec<T>) -> Result<Self> {
        let n_features = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::Dimension { expected: n_features, found: bad.len() });
        }
        Self::new(n_features, rows.concat(), targets)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn input(&self, n: usize) -> &[T] {
        &self.inputs[n * self.n_features..(n + 1) * self.n_features]
    }

    pub fn target(&self, n: usize) -> T {
        self.targets[n]
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn with_targets(&self, targets: Vec<T>) -> Result<Self> {
        Self::new(self.n_features, self.inputs.clone(), targets)
    }

    /// Rows reordered by `order` (which may repeat or drop rows).
    pub fn select(&self, order: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(order.len() * self.n_features);
        let mut targets = Vec::with_capacity(order.len());
        for &i in order {
            inputs.extend_from_slice(self.input(i));
            targets.push(self.targets[i]);
        }
        Self { n_features: self.n_features, inputs, targets }
    }
}

/// Draws each weight in group `g` from `N(0, 1/α_g)`.
pub fn init_weights<T: Scalar>(
    layout: &NetworkLayout,
    alphas: &Hyperparameters<T>,
    seed: u64,
) -> Result<NetworkWeights<T>> {
    layout.validate()?;
    let groups = WeightGroups::ard(layout);
    alphas.validate_for(&groups)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = groups
        .labels()
        .iter()
        .map(|&g| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::of(z / alphas.alphas[g].as_f64().sqrt())
        })
        .collect();
    Ok(NetworkWeights { layout: *layout, values, groups })
}

impl<T: Scalar> NetworkWeights<T> {
    /// Weights with the ARD partition for `layout`.
    pub fn from_values(layout: NetworkLayout, values: Vec<T>) -> Result<Self> {
        layout.validate()?;
        if values.len() != layout.weight_count() {
            return Err(Error::Dimension { expected: layout.weight_count(), found: values.len() });
        }
        if !all_finite(&values) {
            return Err(Error::NonFinite("network weights"));
        }
        Ok(Self { layout, values, groups: WeightGroups::ard(&layout) })
    }

    pub fn zeros(layout: NetworkLayout) -> Result<Self> {
        Self::from_values(layout, vec![T::zero(); layout.weight_count()])
    }

    /// Same layout and groups, different values (no validation of finiteness).
    pub fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { layout: self.layout, values, groups: self.groups.clone() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.layout.n_inputs {
            return Err(Error::Dimension { expected: self.layout.n_inputs, found: x.len() });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    fn check_data(&self, data: &RegressionData<T>) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.n_features() != self.layout.n_inputs {
            return Err(Error::Dimension { expected: self.layout.n_inputs, found: data.n_features() });
        }
        Ok(())
    }

    /// Fills `hidden` with tanh activations and returns the network output.
    fn propagate(&self, x: &[T], hidden: &mut [T]) -> T {
        let l = &self.layout;
        let h = l.n_hidden;
        let w = &self.values;
        hidden.copy_from_slice(&w[l.hidden_bias_offset()..l.hidden_bias_offset() + h]);
        for (i, &xi) in x.iter().enumerate() {
            let fan_out = &w[i * h..(i + 1) * h];
            for (a, &wij) in hidden.iter_mut().zip(fan_out) {
                *a += wij * xi;
            }
        }
        let mut y = w[l.output_bias_index()];
        let out_w = &w[l.output_weight_offset()..l.output_weight_offset() + h];
        for (z, &v) in hidden.iter_mut().zip(out_w) {
            *z = z.tanh();
            y += *z * v;
        }
        y
    }

    /// Adds `scale · ∂f(x)/∂w` into `grad`, given the hidden activations of `x`.
    fn accumulate_output_gradient(&self, x: &[T], hidden: &[T], scale: T, grad: &mut [T]) {
        let l = &self.layout;
        let h = l.n_hidden;
        let out_off = l.output_weight_offset();
        let bias_off = l.hidden_bias_offset();
        grad[l.output_bias_index()] += scale;
        for j in 0..h {
            let z = hidden[j];
            grad[out_off + j] += scale * z;
            let delta = scale * self.values[out_off + j] * (T::one() - z * z);
            grad[bias_off + j] += delta;
            for (i, &xi) in x.iter().enumerate() {
                grad[i * h + j] += delta * xi;
            }
        }
    }

    /// Network response `f(x; w)` for a normalized input.
    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        let mut hidden = vec![T::zero(); self.layout.n_hidden];
        Ok(self.propagate(x, &mut hidden))
    }

    /// `∂f(x; w)/∂w`.
    pub fn output_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut hidden = vec![T::zero(); self.layout.n_hidden];
        self.propagate(x, &mut hidden);
        let mut grad = vec![T::zero(); self.len()];
        self.accumulate_output_gradient(x, &hidden, T::one(), &mut grad);
        Ok(grad)
    }

    /// `E_D = ½ Σₙ (f(xₙ; w) − yₙ)²`.
    pub fn data_error(&self, data: &RegressionData<T>) -> Result<T> {
        self.check_data(data)?;
        let mut hidden = vec![T::zero(); self.layout.n_hidden];
        let mut sum = T::zero();
        for n in 0..data.len() {
            let r = self.propagate(data.input(n), &mut hidden) - data.target(n);
            sum += r * r;
        }
        Ok(sum * T::of(0.5))
    }

    /// Exact `∂E_D/∂w` by backpropagation.
    pub fn data_error_gradient(&self, data: &RegressionData<T>) -> Result<Vec<T>> {
        self.data_error_and_gradient(data).map(|(_, g)| g)
    }

    pub fn data_error_and_gradient(&self, data: &RegressionData<T>) -> Result<(T, Vec<T>)> {
        self.check_data(data)?;
        let mut hidden = vec![T::zero(); self.layout.n_hidden];
        let mut grad = vec![T::zero(); self.len()];
        let mut sum = T::zero();
        for n in 0..data.len() {
            let x = data.input(n);
            let r = self.propagate(x, &mut hidden) - data.target(n);
            sum += r * r;
            self.accumulate_output_gradient(x, &hidden, r, &mut grad);
        }
        Ok((sum * T::of(0.5), grad))
    }
}
