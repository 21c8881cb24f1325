//! Epoch-batched meta-algorithm: hold one expert per epoch of `ceil(T^alpha)`
//! rounds and train the base learner on epoch-averaged primary losses.

use crate::error::{invalid, Result};
use crate::learners::{learner_init, BaseLearner, LearnerState, Selection};
use crate::stream::LossStream;
use crate::trace::{RunTrace, TraceBuilder};
use crate::types::{ceil_pow, ActiveSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    horizon: usize,
    length: usize,
}

pub fn epoch_schedule(horizon: usize, alpha: f64) -> Result<EpochSchedule> {
    if horizon == 0 {
        return Err(invalid("T", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} is not in [0, 1]")));
    }
    Ok(EpochSchedule { horizon, length: ceil_pow(horizon, alpha).min(horizon) })
}

impl EpochSchedule {
    pub(crate) fn with_length(horizon: usize, length: usize) -> Self {
        EpochSchedule { horizon, length: length.clamp(1, horizon.max(1)) }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Nominal epoch length `m`.
    pub fn epoch_length(&self) -> usize {
        self.length
    }

    pub fn num_epochs(&self) -> usize {
        self.horizon.div_ceil(self.length)
    }

    /// Zero-based epoch containing round `t`.
    pub fn epoch_of(&self, t: usize) -> usize {
        (t - 1) / self.length
    }

    /// Inclusive round interval of epoch `e` (zero-based).
    pub fn bounds(&self, e: usize) -> (usize, usize) {
        let start = e * self.length + 1;
        (start, ((e + 1) * self.length).min(self.horizon))
    }

    pub fn epochs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_epochs()).map(|e| self.bounds(e))
    }

    pub fn is_epoch_start(&self, t: usize) -> bool {
        (t - 1).is_multiple_of(self.length)
    }

    pub fn is_epoch_end(&self, t: usize) -> bool {
        t.is_multiple_of(self.length) || t == self.horizon
    }
}

/// Componentwise mean of the given rounds.
pub fn epoch_average<'a>(rounds: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for r in rounds {
        if n == 0 {
            sum = r.to_vec();
        } else {
            if r.len() != sum.len() {
                return Err(crate::Error::DimensionMismatch { expected: sum.len(), actual: r.len() });
            }
            for (s, v) in sum.iter_mut().zip(r) {
                *s += v;
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(invalid("epoch", "must contain at least one round"));
    }
    Ok(sum.into_iter().map(|s| s / n as f64).collect())
}

/// Steps the base learner once per epoch and feeds it epoch averages.
#[derive(Debug, Clone)]
pub(crate) struct EpochDriver {
    schedule: EpochSchedule,
    learner: LearnerState,
    current: Option<Selection>,
    sum: Vec<f64>,
}

impl EpochDriver {
    pub(crate) fn new(base: &BaseLearner, k: usize, schedule: EpochSchedule, seed: u64) -> Result<Self> {
        let learner = learner_init(&base.config(k, schedule.num_epochs(), seed))?;
        Ok(EpochDriver { schedule, learner, current: None, sum: vec![0.0; k] })
    }

    pub(crate) fn select(&mut self, t: usize) -> Result<&Selection> {
        if self.schedule.is_epoch_start(t) {
            self.current = Some(self.learner.step()?);
        }
        Ok(self.current.as_ref().expect("epoch started"))
    }

    pub(crate) fn feed(&mut self, t: usize, primary: &[f64]) -> Result<()> {
        for (s, v) in self.sum.iter_mut().zip(primary) {
            *s += v;
        }
        if self.schedule.is_epoch_end(t) {
            let (start, end) = self.schedule.bounds(self.schedule.epoch_of(t));
            let n = (end - start + 1) as f64;
            let avg: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
            self.learner.observe(&avg)?;
            self.sum.iter_mut().for_each(|s| *s = 0.0);
        }
        Ok(())
    }
}

/// Runs the meta-algorithm over `stream` with base learner `base`.
pub fn asl_run(base: impl Into<BaseLearner>, stream: &LossStream, alpha: f64, seed: u64) -> Result<RunTrace> {
    let base = base.into();
    let k = stream.num_experts();
    let horizon = stream.horizon();
    let mut driver = EpochDriver::new(&base, k, epoch_schedule(horizon, alpha)?, seed)?;
    let all = ActiveSet::full(k);
    let mut builder = TraceBuilder::with_capacity(k, horizon);
    for t in 1..=horizon {
        let Selection { expert, distribution } = driver.select(t)?.clone();
        let losses = stream.round(t, builder.selections());
        builder.push(&distribution, expert, None, &losses, &all)?;
        driver.feed(t, losses.primary())?;
    }
    Ok(builder.finish())
}

/// Runs the base learner directly, one step per round, with horizon `T`.
pub fn run_learner(base: impl Into<BaseLearner>, stream: &LossStream, seed: u64) -> Result<RunTrace> {
    let base = base.into();
    let k = stream.num_experts();
    let horizon = stream.horizon();
    let mut learner = learner_init(&base.config(k, horizon, seed))?;
    let all = ActiveSet::full(k);
    let mut builder = TraceBuilder::with_capacity(k, horizon);
    for t in 1..=horizon {
        let s = learner.step()?;
        let losses = stream.round(t, builder.selections());
        builder.push(&s.distribution, s.expert, None, &losses, &all)?;
        learner.observe(losses.primary())?;
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerKind;
    use crate::metrics::{count_switches, regret_primary_raw, Flavor};
    use crate::stream::ObliviousStream;
    use crate::types::ExpertId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lengths(s: &EpochSchedule) -> Vec<usize> {
        s.epochs().map(|(a, b)| b - a + 1).collect()
    }

    #[test]
    fn schedules() {
        assert_eq!(lengths(&epoch_schedule(16, 0.5).unwrap()), vec![4; 4]);
        assert_eq!(lengths(&epoch_schedule(10, 0.5).unwrap()), vec![4, 4, 2]);
        assert_eq!(lengths(&epoch_schedule(7, 0.0).unwrap()), vec![1; 7]);
        assert_eq!(lengths(&epoch_schedule(7, 1.0).unwrap()), vec![7]);
        assert!(epoch_schedule(0, 0.5).is_err());
        assert!(epoch_schedule(5, 1.5).is_err());
    }

    #[test]
    fn schedule_partitions_horizon() {
        for horizon in 1..200 {
            for alpha in [0.0, 0.3, 0.5, 0.77, 1.0] {
                let s = epoch_schedule(horizon, alpha).unwrap();
                let mut next = 1;
                for (e, (a, b)) in s.epochs().enumerate() {
                    assert_eq!(a, next);
                    assert!(b >= a);
                    if e + 1 < s.num_epochs() {
                        assert_eq!(b - a + 1, s.epoch_length());
                    }
                    for t in a..=b {
                        assert_eq!(s.epoch_of(t), e);
                    }
                    next = b + 1;
                }
                assert_eq!(next, horizon + 1);
            }
        }
    }

    #[test]
    fn averages() {
        let a = [0.3, 0.7];
        assert_eq!(epoch_average([&a[..], &a[..]]).unwrap(), vec![0.3, 0.7]);
        assert_eq!(epoch_average([&[0.0, 1.0][..], &[1.0, 0.0][..]]).unwrap(), vec![0.5, 0.5]);
        assert!(epoch_average(std::iter::empty::<&[f64]>()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..13).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
        let avg = epoch_average(rows.iter().map(Vec::as_slice)).unwrap();
        for h in 0..3 {
            let want = rows.iter().map(|r| r[h]).sum::<f64>() / 13.0;
            assert!((avg[h] - want).abs() < 1e-12);
        }
    }

    fn random_stream(k: usize, horizon: usize, seed: u64) -> LossStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (0..k * horizon).map(|_| rng.random()).collect();
        let s = (0..k * horizon).map(|_| rng.random()).collect();
        ObliviousStream::from_flat(k, p, s).unwrap().into()
    }

    #[test]
    fn single_expert_never_switches() {
        let stream = random_stream(1, 50, 1);
        let trace = asl_run(LearnerKind::Sd, &stream, 0.5, 3).unwrap();
        assert!(trace.selections().iter().all(|&h| h == ExpertId(0)));
        assert_eq!(count_switches(&trace), 0);
    }

    #[test]
    fn selection_constant_within_epochs() {
        let stream = random_stream(3, 100, 4);
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let trace = asl_run(kind, &stream, 0.5, 8).unwrap();
            let sched = epoch_schedule(100, 0.5).unwrap();
            for (a, b) in sched.epochs() {
                let sel = &trace.selections()[a - 1..b];
                assert!(sel.iter().all(|h| *h == sel[0]), "{kind}");
            }
        }
    }

    #[test]
    fn alpha_zero_is_the_base_learner() {
        let stream = random_stream(4, 300, 5);
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            assert_eq!(asl_run(kind, &stream, 0.0, 17).unwrap(), run_learner(kind, &stream, 17).unwrap(), "{kind}");
        }
    }

    #[test]
    fn regret_scales_by_epoch_length() {
        // T = 400, m = 20: the meta run's regret is m times the base
        // learner's regret on the averaged 20-round game
        let (k, horizon, m) = (3, 400, 20);
        let stream = random_stream(k, horizon, 6);
        let obl = stream.as_oblivious().unwrap();
        let sched = epoch_schedule(horizon, 0.5).unwrap();
        assert_eq!(sched.epoch_length(), m);
        let mut p = Vec::new();
        for (a, b) in sched.epochs() {
            p.extend(epoch_average((a..=b).map(|t| obl.primary(t))).unwrap());
        }
        let averaged: LossStream = ObliviousStream::from_flat(k, p.clone(), p).unwrap().into();
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let meta = asl_run(kind, &stream, 0.5, 31).unwrap();
            let base = run_learner(kind, &averaged, 31).unwrap();
            let lhs = regret_primary_raw(&meta, Flavor::Expected).unwrap();
            let rhs = m as f64 * regret_primary_raw(&base, Flavor::Expected).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "{kind}: {lhs} vs {rhs}");
            let lhs = regret_primary_raw(&meta, Flavor::Realized).unwrap();
            let rhs = m as f64 * regret_primary_raw(&base, Flavor::Realized).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "{kind}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn locks_onto_zero_loss_expert() {
        let horizon = 10_000;
        let p: Vec<f64> = (0..horizon).flat_map(|_| [0.0, 1.0]).collect();
        let stream: LossStream = ObliviousStream::from_flat(2, p.clone(), p).unwrap().into();
        let trace = asl_run(LearnerKind::Sd, &stream, 0.5, 1).unwrap();
        let tail = &trace.selections()[horizon - 1000..];
        assert!(tail.iter().all(|&h| h == ExpertId(0)));
        // realized primary regret is m times the base learner's realized
        // regret, which is the number of epochs it spent on expert 1
        let m = 100.0;
        let base_regret = trace.selections().iter().step_by(100).filter(|h| h.0 == 1).count() as f64;
        let reg = regret_primary_raw(&trace, Flavor::Realized).unwrap();
        assert!((reg - m * base_regret).abs() < 1e-9);
        // SD's expected regret on E = 100 rounds with K = 2 stays well below E
        assert!(base_regret < 30.0, "{base_regret}");
    }
}
