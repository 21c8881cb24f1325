use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::stream::{AdaptiveAdversary, LossStream};
use crate::types::{ceil_pow, ExpertId, LossVectorPair};

/// Fair-coin primaries held constant per epoch, and secondaries that charge
/// `c + delta` unless the expert was selected in each of the last
/// `ceil(T^alpha)` rounds.
#[derive(Debug, Clone)]
pub struct SwitchPenalty {
    k: usize,
    horizon: usize,
    epoch: usize,
    c: f64,
    delta: f64,
    coins: Vec<f64>,
}

impl SwitchPenalty {
    pub fn epoch_length(&self) -> usize {
        self.epoch
    }

    /// The one expert held over the whole trailing window, if any.
    fn settled(&self, history: &[ExpertId]) -> Option<ExpertId> {
        if history.len() < self.epoch {
            return None;
        }
        let window = &history[history.len() - self.epoch..];
        window.iter().all(|&h| h == window[0]).then_some(window[0])
    }
}

impl AdaptiveAdversary for SwitchPenalty {
    fn num_experts(&self) -> usize {
        self.k
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn losses(&self, t: usize, history: &[ExpertId]) -> LossVectorPair {
        let e = (t - 1) / self.epoch;
        let primary = self.coins[e * self.k..(e + 1) * self.k].to_vec();
        let settled = self.settled(&history[..(t - 1).min(history.len())]);
        let secondary =
            (0..self.k).map(|h| if settled == Some(ExpertId(h)) { self.c } else { self.c + self.delta }).collect();
        LossVectorPair::new(primary, secondary).expect("coin and penalty losses lie in [0, 1]")
    }
}

pub fn adaptive_lb(horizon: usize, alpha: f64, c: f64, delta: f64, k: usize, seed: u64) -> Result<LossStream> {
    if horizon == 0 || k == 0 {
        return Err(invalid("T", "T and K must be at least 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} is not in [0, 1]")));
    }
    if c < 0.0 || delta < 0.0 || c + delta > 1.0 {
        return Err(invalid("c", format!("c + delta = {} must lie in [0, 1]", c + delta)));
    }
    let epoch = ceil_pow(horizon, alpha);
    let epochs = horizon.div_ceil(epoch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coins = (0..epochs * k).map(|_| if rng.random::<bool>() { 0.0 } else { 1.0 }).collect();
    Ok(LossStream::adaptive(SwitchPenalty { k, horizon, epoch, c, delta, coins }))
}
