//! Scalar-loss base learners behind one init/step/observe interface:
//! Exponential Weights, Shrinking Dartboard and Follow the Lazy Leader.

mod ew;
mod fll;
mod sd;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use ew::ExponentialWeights;
pub use fll::{FllVariant, LazyLeader};
pub use sd::ShrinkingDartboard;

use crate::error::{invalid, Error, Result};
use crate::types::{check_unit_interval, ExpertId, SimplexDistribution};

/// Weights are rescaled once the largest falls below this.
pub(crate) const UNDERFLOW_GUARD: f64 = 1e-150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Ew,
    Sd,
    Fll,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Ew => "ew",
            LearnerKind::Sd => "sd",
            LearnerKind::Fll => "fll",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ew" => Ok(LearnerKind::Ew),
            "sd" => Ok(LearnerKind::Sd),
            "fll" => Ok(LearnerKind::Fll),
            other => Err(invalid("learner", format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub experts: usize,
    /// Number of rounds `E` the learner will be run for.
    pub horizon: usize,
    pub seed: u64,
    /// Overrides the tuned EW rate, SD epsilon or FLL perturbation scale.
    pub rate: Option<f64>,
    pub fll_variant: FllVariant,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind, experts: usize, horizon: usize, seed: u64) -> Self {
        LearnerConfig { kind, experts, horizon, seed, rate: None, fll_variant: FllVariant::default() }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }

    pub fn with_fll_variant(mut self, variant: FllVariant) -> Self {
        self.fll_variant = variant;
        self
    }
}

/// EW learning rate `sqrt(8 ln K / E)`.
pub fn ew_rate(k: usize, horizon: usize) -> f64 {
    (8.0 * (k as f64).ln() / horizon as f64).sqrt()
}

/// SD shrink parameter `sqrt(ln K / E)` clamped into `(0, 0.5]`.
pub fn sd_epsilon(k: usize, horizon: usize) -> f64 {
    ((k as f64).ln() / horizon as f64).sqrt().clamp(1e-12, 0.5)
}

/// FLL perturbation scale `sqrt(E / ln K)`.
pub fn fll_scale(k: usize, horizon: usize) -> f64 {
    let lnk = (k as f64).ln();
    if lnk <= 0.0 { f64::INFINITY } else { (horizon as f64 / lnk).sqrt() }
}

/// Learner family plus variant knobs, without the run-specific sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseLearner {
    pub kind: LearnerKind,
    pub fll_variant: FllVariant,
    pub rate: Option<f64>,
}

impl From<LearnerKind> for BaseLearner {
    fn from(kind: LearnerKind) -> Self {
        BaseLearner { kind, fll_variant: FllVariant::default(), rate: None }
    }
}

impl BaseLearner {
    pub fn config(&self, experts: usize, horizon: usize, seed: u64) -> LearnerConfig {
        LearnerConfig { kind: self.kind, experts, horizon, seed, rate: self.rate, fll_variant: self.fll_variant }
    }
}

/// A selection and the law it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub expert: ExpertId,
    pub distribution: SimplexDistribution,
}

#[derive(Debug, Clone)]
pub enum LearnerState {
    Ew(ExponentialWeights),
    Sd(ShrinkingDartboard),
    Fll(LazyLeader),
}

pub fn learner_init(config: &LearnerConfig) -> Result<LearnerState> {
    if config.experts == 0 {
        return Err(invalid("K", "must be at least 1"));
    }
    if config.horizon == 0 {
        return Err(invalid("E", "must be at least 1"));
    }
    if let Some(r) = config.rate {
        if !(r > 0.0) {
            return Err(invalid("rate", format!("{r} must be positive")));
        }
    }
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.experts;
    Ok(match config.kind {
        LearnerKind::Ew => LearnerState::Ew(ExponentialWeights::new(k, config.rate.unwrap_or_else(|| ew_rate(k, config.horizon)), rng)),
        LearnerKind::Sd => {
            let eps = config.rate.unwrap_or_else(|| sd_epsilon(k, config.horizon));
            if eps >= 1.0 {
                return Err(invalid("rate", format!("SD epsilon {eps} must be below 1")));
            }
            LearnerState::Sd(ShrinkingDartboard::new(k, eps, rng))
        }
        LearnerKind::Fll => LearnerState::Fll(LazyLeader::new(
            k,
            config.rate.unwrap_or_else(|| fll_scale(k, config.horizon)),
            config.fll_variant,
            rng,
        )),
    })
}

impl LearnerState {
    pub fn num_experts(&self) -> usize {
        match self {
            LearnerState::Ew(l) => l.num_experts(),
            LearnerState::Sd(l) => l.num_experts(),
            LearnerState::Fll(l) => l.num_experts(),
        }
    }

    /// Picks this round's expert. Must alternate with [`observe`](Self::observe).
    pub fn step(&mut self) -> Result<Selection> {
        match self {
            LearnerState::Ew(l) => l.step(),
            LearnerState::Sd(l) => l.step(),
            LearnerState::Fll(l) => l.step(),
        }
    }

    pub fn observe(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.num_experts() {
            return Err(Error::DimensionMismatch { expected: self.num_experts(), actual: losses.len() });
        }
        check_unit_interval(losses, 0)?;
        match self {
            LearnerState::Ew(l) => l.observe(losses),
            LearnerState::Sd(l) => l.observe(losses),
            LearnerState::Fll(l) => l.observe(losses),
        }
    }
}

/// Step/observe alternation guard.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Protocol {
    pending: bool,
}

impl Protocol {
    pub(crate) fn begin_step(&mut self) -> Result<()> {
        if self.pending {
            return Err(Error::Protocol("step called twice without observe"));
        }
        self.pending = true;
        Ok(())
    }

    pub(crate) fn begin_observe(&mut self) -> Result<()> {
        if !self.pending {
            return Err(Error::Protocol("observe called before step"));
        }
        self.pending = false;
        Ok(())
    }
}

pub(crate) fn rescale_if_tiny(weights: &mut [f64]) {
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max < UNDERFLOW_GUARD && max > 0.0 {
        for w in weights.iter_mut() {
            *w /= max;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_experts_or_rounds_rejected() {
        assert!(learner_init(&LearnerConfig::new(LearnerKind::Sd, 0, 10, 1)).is_err());
        assert!(learner_init(&LearnerConfig::new(LearnerKind::Ew, 3, 0, 1)).is_err());
    }

    #[test]
    fn single_expert_is_degenerate() {
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let mut l = learner_init(&LearnerConfig::new(kind, 1, 50, 9)).unwrap();
            for t in 0..50 {
                let s = l.step().unwrap();
                assert_eq!(s.expert, ExpertId(0));
                assert_eq!(s.distribution.probabilities(), &[1.0]);
                l.observe(&[(t % 2) as f64]).unwrap();
            }
        }
    }

    #[test]
    fn same_seed_same_selections() {
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let run = || {
                let mut l = learner_init(&LearnerConfig::new(kind, 4, 100, 42)).unwrap();
                (0..10)
                    .map(|t| {
                        let e = l.step().unwrap().expert;
                        l.observe(&[0.1 * (t % 4) as f64, 0.5, 1.0 - 0.1 * t as f64, 0.3]).unwrap();
                        e
                    })
                    .collect::<Vec<_>>()
            };
            assert_eq!(run(), run(), "{kind}");
        }
    }

    #[test]
    fn initial_distribution_uniform() {
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let mut l = learner_init(&LearnerConfig::new(kind, 2, 10_000, 3)).unwrap();
            let d = l.step().unwrap().distribution;
            for p in d.probabilities() {
                assert!((p - 0.5).abs() < 1e-12, "{kind}: {p}");
            }
        }
    }

    #[test]
    fn protocol_is_enforced() {
        let mut l = learner_init(&LearnerConfig::new(LearnerKind::Sd, 2, 10, 0)).unwrap();
        assert!(matches!(l.observe(&[0.0, 0.0]), Err(Error::Protocol(_))));
        l.step().unwrap();
        assert!(matches!(l.step(), Err(Error::Protocol(_))));
        assert!(matches!(l.observe(&[0.0, 1.5]), Err(Error::LossOutOfRange { .. })));
        assert!(matches!(l.observe(&[0.0]), Err(Error::DimensionMismatch { .. })));
        l.observe(&[0.0, 1.0]).unwrap();
        l.step().unwrap();
    }

    #[test]
    fn tuned_parameters() {
        assert!((ew_rate(4, 100) - (8.0 * 4f64.ln() / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(sd_epsilon(1_000_000, 1), 0.5);
        assert!(sd_epsilon(1, 100) > 0.0);
        assert!((fll_scale(2, 100) - (100.0 / 2f64.ln()).sqrt()).abs() < 1e-12);
    }
}
