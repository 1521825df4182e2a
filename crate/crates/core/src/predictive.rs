use serde::{Deserialize, Serialize};

use crate::num::Scalar;

/// Mean prediction with a one-standard-deviation (68%) band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveResult<T> {
    pub mean: T,
    pub sigma: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> PredictiveResult<T> {
    pub fn new(mean: T, sigma: T) -> Self {
        debug_assert!(sigma >= T::zero());
        Self { mean, sigma, lower: mean - sigma, upper: mean + sigma }
    }

    /// Maps a prediction on the standardized target scale back to
    /// `offset + scale · y`; `scale` must be positive.
    pub fn rescale(&self, offset: T, scale: T) -> Self {
        Self::new(offset + scale * self.mean, scale * self.sigma)
    }
}
