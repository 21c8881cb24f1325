use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rescale_if_tiny, Protocol, Selection};
use crate::error::Result;
use crate::types::SimplexDistribution;

/// Hedge: samples afresh from `w_h ∝ exp(-rate * L_h)` every round.
#[derive(Debug, Clone)]
pub struct ExponentialWeights {
    rate: f64,
    weights: Vec<f64>,
    rng: ChaCha8Rng,
    protocol: Protocol,
}

impl ExponentialWeights {
    pub(super) fn new(k: usize, rate: f64, rng: ChaCha8Rng) -> Self {
        ExponentialWeights { rate, weights: vec![1.0; k], rng, protocol: Protocol::default() }
    }

    pub fn num_experts(&self) -> usize {
        self.weights.len()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Unnormalized weights, up to the underflow rescaling.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distribution(&self) -> SimplexDistribution {
        SimplexDistribution::from_weights(&self.weights).expect("weights stay positive")
    }

    pub(super) fn step(&mut self) -> Result<Selection> {
        self.protocol.begin_step()?;
        let distribution = self.distribution();
        let expert = distribution.sample_with(self.rng.random());
        Ok(Selection { expert, distribution })
    }

    pub(super) fn observe(&mut self, losses: &[f64]) -> Result<()> {
        self.protocol.begin_observe()?;
        for (w, l) in self.weights.iter_mut().zip(losses) {
            *w *= (-self.rate * l).exp();
        }
        rescale_if_tiny(&mut self.weights);
        Ok(())
    }
}
