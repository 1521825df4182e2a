//! Bayesian one-hidden-layer perceptrons for scalar regression.
//!
//! Two inference backends share the same network and posterior energy:
//!
//! * [`evidence`]: a Gaussian approximation around the MAP weights, with
//!   evidence re-estimation of one prior `α` per input (automatic relevance
//!   determination) and error bars from the Hessian.
//! * [`hmc`]: Hybrid Monte Carlo sampling of the weight posterior, predicting
//!   with the sample average and its spread.
//!
//! [`options`] generates synthetic American call-option chains to train on.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evidence;
pub mod hmc;
pub mod linalg;
pub mod mlp;
pub mod num;
pub mod optim;
pub mod options;
pub mod predictive;
pub mod prior;

pub use error::{Error, Result};
pub use evidence::{relevance_report, train_map, ArdConfig};
pub use hmc::{predictive_mean_std, run_chain, HmcConfig};
pub use mlp::{init_weights, NetworkLayout, RegressionData, WeightGroups};
pub use num::Scalar;
pub use predictive::PredictiveResult;
pub use prior::{log_prior, posterior_energy, posterior_energy_gradient, EnergyFunction};

pub type NetworkWeights = mlp::NetworkWeights<f64>;
pub type Hyperparameters = prior::Hyperparameters<f64>;
pub type PosteriorEnergy = prior::PosteriorEnergy<f64>;
pub type ArdModel = evidence::ArdModel<f64>;
pub type HmcChain = hmc::HmcChain<f64>;
pub type Matrix = linalg::Matrix<f64>;

pub type NetworkWeightsF32 = mlp::NetworkWeights<f32>;
pub type HyperparametersF32 = prior::Hyperparameters<f32>;
pub type ArdModelF32 = evidence::ArdModel<f32>;
pub type HmcChainF32 = hmc::HmcChain<f32>;
