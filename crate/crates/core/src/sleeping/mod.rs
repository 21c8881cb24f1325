//! Deactivation oracles and the two sleeping-expert algorithms built on them.
//!
//! An oracle watches each active expert's secondary losses and removes it once
//! some interval ending at the current round exceeds `c` by more than
//! `delta * ceil(T^alpha)`. The never-reactivating oracle keeps experts out for
//! good; the reactivating one resets everyone at fixed rounds.

mod a1;
mod a2;

use std::fmt;
use std::str::FromStr;

pub use a1::a1_run;
pub(crate) use a1::a1_block;
pub use a2::{a2_run, a2_weight_update, default_eta, A2Epoch, A2Options, A2Run, AlgorithmLoss, SelectionWeights};

use crate::error::{invalid, Error, Result};
use crate::stream::ObliviousStream;
use crate::types::{ceil_pow, ActiveSet, AssumptionParams, ExpertId, TOLERANCE};

/// Rounds at which every expert is reactivated. Round 1 is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Reactivation {
    #[default]
    Never,
    /// Every `G` rounds: `1 + G, 1 + 2G, ...`.
    Every(usize),
    At(Vec<usize>),
}

impl Reactivation {
    /// Sorted reactivation rounds in `2..=T`.
    pub fn times(&self, horizon: usize) -> Vec<usize> {
        let mut out: Vec<usize> = match self {
            Reactivation::Never => Vec::new(),
            Reactivation::Every(g) => (1..).map(|i| 1 + i * g).take_while(|&t| t <= horizon).collect(),
            Reactivation::At(ts) => ts.iter().copied().filter(|&t| t >= 2 && t <= horizon).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for Reactivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reactivation::Never => f.write_str("none"),
            Reactivation::Every(g) => write!(f, "every {g}"),
            Reactivation::At(ts) => {
                let parts: Vec<String> = ts.iter().map(usize::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Reactivation {
    type Err = Error;

    /// Accepts `none`, `every G` and comma- or space-separated round lists.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Reactivation::Never);
        }
        if let Some(g) = s.strip_prefix("every") {
            let g: usize = g.trim().parse().map_err(|_| invalid("reactivation", format!("bad gap in `{s}`")))?;
            if g == 0 {
                return Err(invalid("reactivation", "gap must be positive"));
            }
            return Ok(Reactivation::Every(g));
        }
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().map_err(|_| invalid("reactivation", format!("bad round `{p}`"))))
            .collect::<Result<Vec<usize>>>()
            .map(Reactivation::At)
    }
}

/// Running max-suffix excess per expert plus the active set it drives.
#[derive(Debug, Clone)]
pub struct DeactivationOracle {
    c: f64,
    threshold: f64,
    horizon: usize,
    accum: Vec<f64>,
    active: ActiveSet,
    resets: Vec<usize>,
    next_reset: usize,
}

impl DeactivationOracle {
    /// Oracle that never reactivates.
    pub fn never_reactivating(k: usize, horizon: usize, params: &AssumptionParams) -> Self {
        Self::reactivating(k, horizon, params, &[])
    }

    /// Oracle that resets every expert at the given rounds.
    pub fn reactivating(k: usize, horizon: usize, params: &AssumptionParams, resets: &[usize]) -> Self {
        Self::with_threshold(k, horizon, params.c, params.threshold(horizon), resets)
    }

    pub(crate) fn with_threshold(k: usize, horizon: usize, c: f64, threshold: f64, resets: &[usize]) -> Self {
        let mut resets = resets.to_vec();
        resets.sort_unstable();
        resets.dedup();
        DeactivationOracle {
            c,
            threshold,
            horizon,
            accum: vec![0.0; k],
            active: ActiveSet::full(k),
            resets,
            next_reset: 0,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `H_t` for the round in progress.
    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accum
    }

    fn is_reset(&self, t: usize) -> bool {
        self.resets.get(self.next_reset) == Some(&t)
    }

    /// Opens round `t`; returns true if this round reactivated everyone.
    pub fn begin_round(&mut self, t: usize) -> bool {
        while self.resets.get(self.next_reset).is_some_and(|&r| r < t) {
            self.next_reset += 1;
        }
        if self.is_reset(t) {
            self.next_reset += 1;
            self.active = ActiveSet::full(self.accum.len());
            self.accum.iter_mut().for_each(|a| *a = 0.0);
            true
        } else {
            false
        }
    }

    /// Closes round `t` and returns `Delta H_t`, the experts leaving from
    /// round `t + 1` on. Nobody leaves on the last round of a block.
    pub fn end_round(&mut self, t: usize, secondary: &[f64]) -> Result<Vec<ExpertId>> {
        if secondary.len() != self.accum.len() {
            return Err(Error::DimensionMismatch { expected: self.accum.len(), actual: secondary.len() });
        }
        for (a, l) in self.accum.iter_mut().zip(secondary) {
            *a = a.max(0.0) + l - self.c;
        }
        if t >= self.horizon || self.is_reset(t + 1) {
            return Ok(Vec::new());
        }
        let removed: Vec<ExpertId> =
            self.active.iter().filter(|h| self.accum[h.0] > self.threshold + TOLERANCE).collect();
        if removed.len() == self.active.len() {
            return Err(Error::OracleStarved { round: t });
        }
        for &h in &removed {
            self.active.remove(h);
        }
        Ok(removed)
    }
}

/// Per-round active sets and removals produced by an oracle over a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetTimeline {
    active: Vec<ActiveSet>,
    removed: Vec<Vec<ExpertId>>,
    resets: Vec<usize>,
}

impl ActiveSetTimeline {
    /// Replays the oracle over an oblivious stream.
    pub fn compute(stream: &ObliviousStream, params: &AssumptionParams, reactivation: &Reactivation) -> Result<Self> {
        let horizon = stream.horizon();
        let resets = reactivation.times(horizon);
        warn_on_short_gaps(&resets, horizon, params.alpha);
        let mut oracle = DeactivationOracle::reactivating(stream.num_experts(), horizon, params, &resets);
        let mut active = Vec::with_capacity(horizon);
        let mut removed = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            oracle.begin_round(t);
            active.push(oracle.active().clone());
            removed.push(oracle.end_round(t, stream.secondary(t))?);
        }
        Ok(ActiveSetTimeline { active, removed, resets })
    }

    pub fn horizon(&self) -> usize {
        self.active.len()
    }

    /// `H_t` (1-based).
    pub fn active(&self, t: usize) -> &ActiveSet {
        &self.active[t - 1]
    }

    /// `Delta H_t` (1-based).
    pub fn removed(&self, t: usize) -> &[ExpertId] {
        &self.removed[t - 1]
    }

    pub fn reactivations(&self) -> &[usize] {
        &self.resets
    }

    /// Rounds `t` with `h` in `Delta H_t`.
    pub fn deactivations(&self, expert: ExpertId) -> Vec<usize> {
        (1..=self.horizon()).filter(|&t| self.removed(t).contains(&expert)).collect()
    }

    pub fn deactivation_count(&self) -> usize {
        self.removed.iter().map(Vec::len).sum()
    }
}

pub(crate) fn warn_on_short_gaps(resets: &[usize], horizon: usize, alpha: f64) {
    let m = ceil_pow(horizon, alpha);
    let mut prev = 1;
    for &t in resets {
        if t - prev < m {
            log::warn!("reactivation gap {} before round {t} is shorter than ceil(T^alpha) = {m}", t - prev);
        }
        prev = t;
    }
}

/// Primary losses with every inactive expert's loss replaced by 1.
pub fn pseudo_primary(primary: &[f64], active: &ActiveSet) -> Vec<f64> {
    primary.iter().zip(active.flags()).map(|(&l, &on)| if on { l } else { 1.0 }).collect()
}

/// Map from the learner's chosen expert to the expert actually played.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertMap {
    targets: Vec<ExpertId>,
}

impl ExpertMap {
    pub fn identity(k: usize) -> Self {
        ExpertMap { targets: (0..k).map(ExpertId).collect() }
    }

    pub fn get(&self, h: ExpertId) -> ExpertId {
        self.targets[h.0]
    }

    pub fn as_slice(&self) -> &[ExpertId] {
        &self.targets
    }

    pub fn range_within(&self, active: &ActiveSet) -> bool {
        self.targets.iter().all(|&h| active.contains(h))
    }
}

/// Sends every expert whose image was just removed to the lowest-index
/// expert of `next`.
pub fn remap_repair(map: &mut ExpertMap, removed: &[ExpertId], next: &ActiveSet, round: usize) -> Result<()> {
    if removed.is_empty() {
        return Ok(());
    }
    let fallback = next.lowest().ok_or(Error::OracleStarved { round })?;
    for target in map.targets.iter_mut() {
        if removed.contains(target) {
            *target = fallback;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(c: f64, delta: f64, alpha: f64) -> AssumptionParams {
        AssumptionParams::new(c, delta, alpha).unwrap()
    }

    fn stream_from_columns(columns: &[Vec<f64>]) -> ObliviousStream {
        let k = columns.len();
        let horizon = columns[0].len();
        let secondary: Vec<f64> = (0..horizon).flat_map(|t| columns.iter().map(move |col| col[t])).collect();
        ObliviousStream::from_flat(k, vec![0.5; k * horizon], secondary).unwrap()
    }

    /// Deactivation rounds by direct evaluation of the interval condition.
    fn brute_force(columns: &[Vec<f64>], c: f64, threshold: f64, resets: &[usize]) -> Vec<Vec<usize>> {
        let horizon = columns[0].len();
        let mut active = vec![true; columns.len()];
        let mut out = vec![Vec::new(); columns.len()];
        let mut block_start = 1;
        for t in 1..=horizon {
            if resets.contains(&t) {
                active.iter_mut().for_each(|a| *a = true);
                block_start = t;
            }
            if t == horizon || resets.contains(&(t + 1)) {
                continue;
            }
            let mut removed = Vec::new();
            for (h, col) in columns.iter().enumerate() {
                if !active[h] {
                    continue;
                }
                let exceeds = (block_start..=t).any(|s| (s..=t).map(|u| col[u - 1] - c).sum::<f64>() > threshold + TOLERANCE);
                if exceeds {
                    removed.push(h);
                }
            }
            for h in removed {
                active[h] = false;
                out[h].push(t);
            }
        }
        out
    }

    #[test]
    fn constant_at_c_never_deactivates() {
        let s = stream_from_columns(&[vec![0.3; 200], vec![0.3; 200]]);
        let tl = ActiveSetTimeline::compute(&s, &params(0.3, 0.1, 0.5), &Reactivation::Never).unwrap();
        assert_eq!(tl.deactivation_count(), 0);
        assert!(tl.active(200).is_full());
    }

    #[test]
    fn single_spike_deactivates_at_once() {
        // threshold 0.05 * 10 = 0.5, the spike alone carries excess 0.9
        let mut col = vec![0.1; 100];
        col[40] = 1.0;
        let s = stream_from_columns(&[col, vec![0.1; 100]]);
        let p = params(0.1, 0.05, 0.5);
        let tl = ActiveSetTimeline::compute(&s, &p, &Reactivation::Never).unwrap();
        assert_eq!(tl.deactivations(ExpertId(0)), vec![41]);
        assert!(!tl.active(42).contains(ExpertId(0)));
        assert!(tl.active(41).contains(ExpertId(0)));
    }

    #[test]
    fn starvation_is_an_error() {
        let s = stream_from_columns(&[vec![1.0; 50]]);
        let err = ActiveSetTimeline::compute(&s, &params(0.0, 0.1, 0.5), &Reactivation::Never).unwrap_err();
        assert!(matches!(err, Error::OracleStarved { .. }));
    }

    #[test]
    fn reactivation_every_round_keeps_everyone() {
        let s = stream_from_columns(&[vec![1.0; 50], vec![0.0; 50]]);
        let tl = ActiveSetTimeline::compute(&s, &params(0.0, 0.01, 0.5), &Reactivation::Every(1)).unwrap();
        assert!((1..=50).all(|t| tl.active(t).is_full()));
    }

    #[test]
    fn accumulator_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..200 {
            let k = rng.random_range(2..5);
            let horizon = rng.random_range(5..80);
            let mut columns: Vec<Vec<f64>> =
                (0..k).map(|_| (0..horizon).map(|_| rng.random::<f64>().powi(2)).collect()).collect();
            // one expert stays at c so the active set never empties
            columns[0] = vec![0.2; horizon];
            let p = params(0.2, rng.random_range(0.01..0.3), 0.5);
            let reactivation = if case % 2 == 0 {
                Reactivation::Never
            } else {
                Reactivation::At((0..3).map(|_| rng.random_range(2..=horizon)).collect())
            };
            let s = stream_from_columns(&columns);
            let tl = ActiveSetTimeline::compute(&s, &p, &reactivation).unwrap();
            let want = brute_force(&columns, p.c, p.threshold(horizon), &reactivation.times(horizon));
            for h in 0..k {
                assert_eq!(tl.deactivations(ExpertId(h)), want[h], "case {case} expert {h}");
            }
            // monotone within blocks
            for t in 1..horizon {
                if !tl.reactivations().contains(&(t + 1)) {
                    assert!(tl.active(t + 1).is_subset_of(tl.active(t)));
                }
            }
        }
    }

    #[test]
    fn no_reactivation_means_oracle_one() {
        let cols = vec![vec![0.2; 60], (0..60).map(|t| if t % 3 == 0 { 0.9 } else { 0.1 }).collect()];
        let s = stream_from_columns(&cols);
        let p = params(0.2, 0.2, 0.5);
        let a = ActiveSetTimeline::compute(&s, &p, &Reactivation::Never).unwrap();
        let b = ActiveSetTimeline::compute(&s, &p, &Reactivation::At(vec![])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pseudo_losses_mask_inactive() {
        let all = ActiveSet::full(3);
        assert_eq!(pseudo_primary(&[0.1, 0.2, 0.3], &all), vec![0.1, 0.2, 0.3]);
        let one = ActiveSet::from_members(3, &[ExpertId(1)]);
        assert_eq!(pseudo_primary(&[0.1, 0.2, 0.3], &one), vec![1.0, 0.2, 1.0]);
        let mixed = ActiveSet::from_flags(vec![true, false, true, false]);
        let l = [0.4, 0.0, 0.9, 0.25];
        let got = pseudo_primary(&l, &mixed);
        for h in 0..4 {
            assert_eq!(got[h], if mixed.flags()[h] { l[h] } else { 1.0 });
            assert!(got[h] >= l[h]);
        }
    }

    #[test]
    fn repair_sends_removed_to_lowest_active() {
        let mut f = ExpertMap::identity(3);
        remap_repair(&mut f, &[], &ActiveSet::full(3), 1).unwrap();
        assert_eq!(f, ExpertMap::identity(3));
        let next = ActiveSet::from_members(3, &[ExpertId(0), ExpertId(1)]);
        remap_repair(&mut f, &[ExpertId(2)], &next, 1).unwrap();
        assert_eq!(f.as_slice(), &[ExpertId(0), ExpertId(1), ExpertId(0)]);

        let mut f = ExpertMap::identity(4);
        let mut active = ActiveSet::full(4);
        for gone in [0, 2, 1] {
            active.remove(ExpertId(gone));
            remap_repair(&mut f, &[ExpertId(gone)], &active, 1).unwrap();
            assert!(f.range_within(&active));
        }
        assert!(f.as_slice().iter().all(|&h| h == ExpertId(3)));
        let empty = ActiveSet::from_flags(vec![false; 4]);
        assert!(remap_repair(&mut f, &[ExpertId(3)], &empty, 7).is_err());
    }

    #[test]
    fn reactivation_parsing() {
        assert_eq!("every 500".parse::<Reactivation>().unwrap(), Reactivation::Every(500));
        assert_eq!("100, 300".parse::<Reactivation>().unwrap(), Reactivation::At(vec![100, 300]));
        assert_eq!("none".parse::<Reactivation>().unwrap(), Reactivation::Never);
        assert!("every 0".parse::<Reactivation>().is_err());
        assert!("1,x".parse::<Reactivation>().is_err());
        assert_eq!(Reactivation::Every(4).times(13), vec![5, 9, 13]);
        assert_eq!(Reactivation::At(vec![9, 1, 3, 3, 40]).times(10), vec![3, 9]);
    }
}
