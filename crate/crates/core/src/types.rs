//! Domain types shared by every module: experts, loss pairs, distributions,
//! active sets and the bounded-variance parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance for simplex sums and cumulative-loss comparisons.
pub const TOLERANCE: f64 = 1e-9;

/// `ceil(t^alpha)`, snapping to the nearest integer when the power lands
/// within floating noise of it (so `4096^0.5` is 64, not 65).
pub fn ceil_pow(t: usize, alpha: f64) -> usize {
    let x = (t as f64).powf(alpha);
    let nearest = x.round();
    let snapped = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { x.ceil() };
    (snapped as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExpertId(pub usize);

impl ExpertId {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn checked(index: usize, k: usize) -> Result<Self> {
        if index < k {
            Ok(ExpertId(index))
        } else {
            Err(Error::ExpertOutOfRange { index, k })
        }
    }
}

impl fmt::Display for ExpertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn check_unit_interval(values: &[f64], round: usize) -> Result<()> {
    for (expert, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::LossOutOfRange { round, expert, value });
        }
    }
    Ok(())
}

/// Primary and secondary loss vectors of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVectorPair {
    primary: Vec<f64>,
    secondary: Vec<f64>,
}

impl LossVectorPair {
    pub fn new(primary: Vec<f64>, secondary: Vec<f64>) -> Result<Self> {
        if primary.len() != secondary.len() {
            return Err(Error::DimensionMismatch { expected: primary.len(), actual: secondary.len() });
        }
        if primary.is_empty() {
            return Err(invalid("K", "loss vectors must cover at least one expert"));
        }
        check_unit_interval(&primary, 0)?;
        check_unit_interval(&secondary, 0)?;
        Ok(LossVectorPair { primary, secondary })
    }

    pub fn num_experts(&self) -> usize {
        self.primary.len()
    }

    pub fn primary(&self) -> &[f64] {
        &self.primary
    }

    pub fn secondary(&self) -> &[f64] {
        &self.secondary
    }
}

/// Probability vector over experts.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexDistribution {
    weights: Vec<f64>,
}

impl SimplexDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("distribution", "empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(invalid("distribution", format!("entry {w} is not a finite non-negative number")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > TOLERANCE {
            return Err(invalid("distribution", format!("entries sum to {sum}")));
        }
        Ok(SimplexDistribution { weights })
    }

    /// Normalizes positive weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(invalid("weights", format!("total weight {total} cannot be normalized")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Self {
        SimplexDistribution { weights: vec![1.0 / k as f64; k] }
    }

    pub fn point_mass(k: usize, expert: ExpertId) -> Self {
        let mut weights = vec![0.0; k];
        weights[expert.0] = 1.0;
        SimplexDistribution { weights }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_experts(&self) -> usize {
        self.weights.len()
    }

    pub fn expectation(&self, losses: &[f64]) -> f64 {
        self.weights.iter().zip(losses).map(|(p, l)| p * l).sum()
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`. Zero-mass experts are never returned.
    pub fn sample_with(&self, u: f64) -> ExpertId {
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (h, &p) in self.weights.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            last_positive = h;
            acc += p;
            if u < acc {
                return ExpertId(h);
            }
        }
        ExpertId(last_positive)
    }

    /// Image of this distribution under an expert map.
    pub fn push_forward(&self, map: &[ExpertId]) -> SimplexDistribution {
        let mut weights = vec![0.0; self.weights.len()];
        for (h, &p) in self.weights.iter().enumerate() {
            weights[map[h].0] += p;
        }
        SimplexDistribution { weights }
    }

    pub fn is_supported_on(&self, active: &ActiveSet) -> bool {
        self.weights.iter().enumerate().all(|(h, &p)| p == 0.0 || active.contains(ExpertId(h)))
    }
}

/// Subset of experts, stored as one flag per expert.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    members: Vec<bool>,
}

impl ActiveSet {
    pub fn full(k: usize) -> Self {
        ActiveSet { members: vec![true; k] }
    }

    pub fn from_flags(members: Vec<bool>) -> Self {
        ActiveSet { members }
    }

    pub fn from_members(k: usize, experts: &[ExpertId]) -> Self {
        let mut members = vec![false; k];
        for e in experts {
            members[e.0] = true;
        }
        ActiveSet { members }
    }

    pub fn num_experts(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, expert: ExpertId) -> bool {
        self.members.get(expert.0).copied().unwrap_or(false)
    }

    pub fn remove(&mut self, expert: ExpertId) {
        self.members[expert.0] = false;
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|m| *m)
    }

    pub fn is_full(&self) -> bool {
        self.members.iter().all(|m| *m)
    }

    pub fn flags(&self) -> &[bool] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = ExpertId> + '_ {
        self.members.iter().enumerate().filter(|(_, m)| **m).map(|(h, _)| ExpertId(h))
    }

    pub fn lowest(&self) -> Option<ExpertId> {
        self.iter().next()
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.members.iter().zip(&other.members).all(|(a, b)| !*a || *b)
    }

    /// Lowercase hexadecimal bitmask, bit `h` set when expert `h` is active.
    pub fn to_hex(&self) -> String {
        let nibbles = self.members.len().div_ceil(4).max(1);
        let mut out = String::with_capacity(nibbles);
        for n in (0..nibbles).rev() {
            let mut v = 0u32;
            for b in 0..4 {
                if self.members.get(4 * n + b).copied().unwrap_or(false) {
                    v |= 1 << b;
                }
            }
            out.push(char::from_digit(v, 16).expect("nibble"));
        }
        let trimmed = out.trim_start_matches('0');
        if trimmed.is_empty() { "0".to_string() } else { trimmed.to_string() }
    }

    pub fn from_hex(hex: &str, k: usize) -> Option<Self> {
        let mut members = vec![false; k];
        for (n, c) in hex.chars().rev().enumerate() {
            let v = c.to_digit(16)?;
            for b in 0..4 {
                if v & (1 << b) != 0 {
                    *members.get_mut(4 * n + b)? = true;
                }
            }
        }
        Some(ActiveSet { members })
    }
}

/// Bounded-variance parameters `(c, delta, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub c: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl AssumptionParams {
    pub fn new(c: f64, delta: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("c", c), ("delta", delta), ("alpha", alpha)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("{v} is outside [0, 1]")));
            }
        }
        Ok(AssumptionParams { c, delta, alpha })
    }

    /// Per-interval excess budget `delta * ceil(T^alpha)`.
    pub fn threshold(&self, horizon: usize) -> f64 {
        self.delta * ceil_pow(horizon, self.alpha) as f64
    }
}
