//! Maps encoded observations to the activation vector seen by the readout.

use crate::encoding::RateVector;
use crate::error::{Error, Result};
use crate::reservoir::Activation;

pub trait Featurizer {
    /// Length of the produced activation.
    fn dim(&self) -> usize;

    /// Expected number of input rates.
    fn input_dim(&self) -> usize;

    /// Forgets any state carried between calls (episode boundary).
    fn reset(&mut self);

    fn features(&mut self, rates: &RateVector) -> Result<Activation>;
}

/// Bypasses the liquid: input `i` is active iff its rate is nonzero.
#[derive(Debug, Clone)]
pub struct IdentityFeatures {
    dim: usize,
}

impl IdentityFeatures {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Featurizer for IdentityFeatures {
    fn dim(&self) -> usize {
        self.dim
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn reset(&mut self) {}

    fn features(&mut self, rates: &RateVector) -> Result<Activation> {
        if rates.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "identity features",
                expected: self.dim,
                actual: rates.len(),
            });
        }
        let bits: Vec<bool> = rates.rates().iter().map(|&r| r > 0.0).collect();
        Ok(Activation::from_binary(&bits))
    }
}
