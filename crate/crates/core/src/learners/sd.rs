use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rescale_if_tiny, Protocol, Selection};
use crate::error::Result;
use crate::types::{ExpertId, SimplexDistribution};

/// Shrinking Dartboard: weights shrink by `(1 - eps)^loss`; the held expert is
/// kept with probability `w_{t,h} / w_{t-1,h}` and otherwise the learner
/// redraws from the normalized weights. The selection's marginal law equals
/// the normalized weights every round.
#[derive(Debug, Clone)]
pub struct ShrinkingDartboard {
    epsilon: f64,
    weights: Vec<f64>,
    /// `w_{t,h} / w_{t-1,h}` from the most recent update; immune to rescaling.
    keep_ratio: Vec<f64>,
    held: Option<ExpertId>,
    rng: ChaCha8Rng,
    protocol: Protocol,
}

impl ShrinkingDartboard {
    pub(super) fn new(k: usize, epsilon: f64, rng: ChaCha8Rng) -> Self {
        ShrinkingDartboard {
            epsilon,
            weights: vec![1.0; k],
            keep_ratio: vec![1.0; k],
            held: None,
            rng,
            protocol: Protocol::default(),
        }
    }

    pub fn num_experts(&self) -> usize {
        self.weights.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn keep_probability(&self, expert: ExpertId) -> f64 {
        self.keep_ratio[expert.0]
    }

    pub fn held(&self) -> Option<ExpertId> {
        self.held
    }

    pub fn distribution(&self) -> SimplexDistribution {
        SimplexDistribution::from_weights(&self.weights).expect("weights stay positive")
    }

    pub(super) fn step(&mut self) -> Result<Selection> {
        self.protocol.begin_step()?;
        let distribution = self.distribution();
        let expert = match self.held {
            Some(h) if self.rng.random::<f64>() < self.keep_ratio[h.0] => h,
            _ => distribution.sample_with(self.rng.random()),
        };
        self.held = Some(expert);
        Ok(Selection { expert, distribution })
    }

    pub(super) fn observe(&mut self, losses: &[f64]) -> Result<()> {
        self.protocol.begin_observe()?;
        let base = 1.0 - self.epsilon;
        for ((w, r), l) in self.weights.iter_mut().zip(self.keep_ratio.iter_mut()).zip(losses) {
            *r = base.powf(*l);
            *w *= *r;
        }
        rescale_if_tiny(&mut self.weights);
        Ok(())
    }
}
