use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pseudo_primary, remap_repair, warn_on_short_gaps, DeactivationOracle, ExpertMap, Reactivation};
use crate::error::{invalid, Error, Result};
use crate::meta::epoch_schedule;
use crate::stream::LossStream;
use crate::trace::{RunTrace, TraceBuilder};
use crate::types::{ActiveSet, AssumptionParams, ExpertId, SimplexDistribution};

const RESCALE_BELOW: f64 = 1e-100;

/// Which algorithm loss enters the weight exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlgorithmLoss {
    /// `p_m . l~_e`, the loss of the learner's own distribution.
    #[default]
    Expected,
    /// Pseudo loss of the expert actually played.
    Realized,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct A2Options {
    pub reactivation: Reactivation,
    pub eta: Option<f64>,
    pub algorithm_loss: AlgorithmLoss,
}

/// `1 - sqrt(2 ln K / E)` clamped into `[1/sqrt(2), 1 - 1e-6]`.
pub fn default_eta(k: usize, epochs: usize) -> f64 {
    (1.0 - (2.0 * (k as f64).ln() / epochs as f64).sqrt()).clamp(std::f64::consts::FRAC_1_SQRT_2, 1.0 - 1e-6)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(std::f64::consts::FRAC_1_SQRT_2 - 1e-12..1.0).contains(&eta) {
        return Err(invalid("eta", format!("{eta} is not in [1/sqrt(2), 1)")));
    }
    Ok(())
}

/// Per-target weights `w^{h*}_h`, one row per target `h*`. Entries share a
/// common scale factor `exp(log_scale)` so long runs do not underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionWeights {
    k: usize,
    w: Vec<f64>,
    log_scale: f64,
}

impl SelectionWeights {
    pub fn uniform(k: usize) -> Self {
        SelectionWeights { k, w: vec![1.0 / k as f64; k * k], log_scale: 0.0 }
    }

    pub fn num_experts(&self) -> usize {
        self.k
    }

    /// `w^{target}_h`, up to the common scale.
    pub fn get(&self, target: ExpertId, h: ExpertId) -> f64 {
        self.w[target.0 * self.k + h.0]
    }

    /// `w_h = sum over active targets of w^{h*}_h`.
    pub fn aggregated(&self, active: &ActiveSet) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for target in active.iter() {
            for (o, w) in out.iter_mut().zip(&self.w[target.0 * self.k..(target.0 + 1) * self.k]) {
                *o += w;
            }
        }
        out
    }

    /// Natural log of the sum of all entries, scale included.
    pub fn log_total(&self) -> f64 {
        self.w.iter().sum::<f64>().ln() + self.log_scale
    }

    /// Divides every entry by the largest once it is tiny; returns the factor
    /// applied.
    fn rescale(&mut self) -> f64 {
        let max = self.w.iter().copied().fold(0.0, f64::max);
        if max >= RESCALE_BELOW || max == 0.0 {
            return 1.0;
        }
        self.w.iter_mut().for_each(|w| *w /= max);
        self.log_scale += max.ln();
        1.0 / max
    }
}

/// `w^{h*}_h <- w^{h*}_h * eta^(I_{h*} (l~_h - eta l~_A) + 1)` for every pair,
/// with `I_{h*}` read from `active`.
pub fn a2_weight_update(
    weights: &SelectionWeights,
    active: &ActiveSet,
    pseudo: &[f64],
    algorithm_loss: f64,
    eta: f64,
) -> Result<SelectionWeights> {
    check_eta(eta)?;
    let k = weights.k;
    for n in [active.num_experts(), pseudo.len()] {
        if n != k {
            return Err(Error::DimensionMismatch { expected: k, actual: n });
        }
    }
    let mut out = weights.clone();
    let awake: Vec<f64> = pseudo.iter().map(|l| eta.powf(l - eta * algorithm_loss + 1.0)).collect();
    for target in 0..k {
        let row = &mut out.w[target * k..(target + 1) * k];
        if active.contains(ExpertId(target)) {
            row.iter_mut().zip(&awake).for_each(|(w, f)| *w *= f);
        } else {
            row.iter_mut().for_each(|w| *w *= eta);
        }
    }
    Ok(out)
}

/// Diagnostics of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Epoch {
    pub start: usize,
    pub end: usize,
    /// `H_e`, the active set the epoch was played under.
    pub active: ActiveSet,
    /// `p_m` over the learner's experts, before the expert map.
    pub distribution: SimplexDistribution,
    /// True when `h_m` was drawn fresh from `p_m`.
    pub fresh: bool,
    /// `w_{m,h_{m-1}} / w_{m-1,h_{m-1}}` on lazy epochs.
    pub keep_probability: Option<f64>,
    pub base_selection: ExpertId,
    pub played: ExpertId,
    pub algorithm_loss: f64,
    /// `ln sum w^{h*}_{m,h}` before and after this epoch's update.
    pub log_weight_sum: f64,
    pub log_weight_sum_next: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct A2Run {
    pub trace: RunTrace,
    pub epochs: Vec<A2Epoch>,
    pub eta: f64,
}

/// Time-selection weights with lazy switching under the reactivating oracle.
///
/// Active sets change only at epoch starts: reactivation rounds are moved to
/// the start of the epoch containing them, and `H_e` is the oracle's set at
/// the first round of epoch `e`. At reactivation epochs the expert map is
/// reset to the identity and `h_m` is drawn fresh.
pub fn a2_run(stream: &LossStream, params: &AssumptionParams, options: &A2Options, seed: u64) -> Result<A2Run> {
    let stream = stream.as_oblivious()?;
    let k = stream.num_experts();
    let horizon = stream.horizon();
    let schedule = epoch_schedule(horizon, params.alpha)?;
    let raw = options.reactivation.times(horizon);
    warn_on_short_gaps(&raw, horizon, params.alpha);
    let mut resets: Vec<usize> = raw.iter().map(|&t| schedule.bounds(schedule.epoch_of(t)).0).filter(|&t| t > 1).collect();
    resets.dedup();
    let eta = options.eta.unwrap_or_else(|| default_eta(k, schedule.num_epochs()));
    check_eta(eta)?;

    let mut oracle = DeactivationOracle::reactivating(k, horizon, params, &resets);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = SelectionWeights::uniform(k);
    let mut map = ExpertMap::identity(k);
    let mut previous: Option<(ExpertId, Vec<f64>)> = None;
    let mut builder = TraceBuilder::with_capacity(k, horizon);
    let mut epochs = Vec::with_capacity(schedule.num_epochs());
    let mut sum = vec![0.0; k];

    for e in 0..schedule.num_epochs() {
        let (start, end) = schedule.bounds(e);
        let fresh = oracle.begin_round(start) || e == 0;
        if fresh {
            map = ExpertMap::identity(k);
        }
        let active = oracle.active().clone();
        let agg = weights.aggregated(&active);
        let p = SimplexDistribution::from_weights(&agg)?;
        let (base_selection, keep_probability) = match &previous {
            Some((h, prev)) if !fresh => {
                let ratio = agg[h.0] / prev[h.0];
                if ratio > 1.0 + 1e-12 {
                    return Err(Error::Invariant(format!("keep probability {ratio} above 1 in epoch {}", e + 1)));
                }
                let keep = rng.random::<f64>() < ratio;
                (if keep { *h } else { p.sample_with(rng.random()) }, Some(ratio))
            }
            _ => (p.sample_with(rng.random()), None),
        };
        let played = map.get(base_selection);
        let shown = p.push_forward(map.as_slice());

        sum.iter_mut().for_each(|s| *s = 0.0);
        for t in start..=end {
            if t > start {
                oracle.begin_round(t);
            }
            let losses = stream.round(t);
            builder.push(&shown, played, Some(base_selection), &losses, &active)?;
            sum.iter_mut().zip(losses.primary()).for_each(|(s, l)| *s += l);
            oracle.end_round(t, losses.secondary())?;
        }
        let len = (end - start + 1) as f64;
        let avg: Vec<f64> = sum.iter().map(|s| s / len).collect();
        let pseudo = pseudo_primary(&avg, &active);
        let algorithm_loss = match options.algorithm_loss {
            AlgorithmLoss::Expected => p.expectation(&pseudo),
            AlgorithmLoss::Realized => pseudo[played.0],
        };

        let log_weight_sum = weights.log_total();
        weights = a2_weight_update(&weights, &active, &pseudo, algorithm_loss, eta)?;
        let log_weight_sum_next = weights.log_total();
        if options.algorithm_loss == AlgorithmLoss::Expected && log_weight_sum_next > log_weight_sum + eta.ln() + 1e-9 {
            return Err(Error::Invariant(format!("weight sum grew faster than eta in epoch {}", e + 1)));
        }

        let next = oracle.active();
        let removed: Vec<ExpertId> = active.iter().filter(|&h| !next.contains(h)).collect();
        remap_repair(&mut map, &removed, next, end)?;

        epochs.push(A2Epoch {
            start,
            end,
            active,
            distribution: p,
            fresh,
            keep_probability,
            base_selection,
            played,
            algorithm_loss,
            log_weight_sum,
            log_weight_sum_next,
        });
        let factor = weights.rescale();
        let mut agg = agg;
        agg.iter_mut().for_each(|w| *w *= factor);
        previous = Some((base_selection, agg));
    }
    Ok(A2Run { trace: builder.finish(), epochs, eta })
}
