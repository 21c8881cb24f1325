//! Loss-stream constructions behind the lower bounds, plus a generator of
//! random streams that satisfy the interval bound.

mod adaptive;
mod cumulative;
mod good;
mod staircase;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use adaptive::{adaptive_lb, SwitchPenalty};
pub use cumulative::build_appendix_b;
pub use good::{random_bounded_variance, random_bounded_variance_with};
pub use staircase::{build_link, link_breakpoints};

use crate::error::{invalid, Result};
use crate::stream::ObliviousStream;
use crate::types::ceil_pow;

/// Which hidden world a randomized construction drew.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorldDraw {
    pub index: usize,
    /// The Bernoulli prefix length was negative and clamped to zero.
    pub clamped: bool,
    /// The concentration events held, so compensation was exact.
    pub events_held: bool,
}

/// A constructed stream with the parameters it was built for.
#[derive(Debug, Clone)]
pub struct BuiltStream {
    pub stream: ObliviousStream,
    pub c: f64,
    pub delta: Option<f64>,
    pub world: Option<WorldDraw>,
}

/// Expected losses of the expert that predicts the negative label with
/// probability `b` when the label is negative with probability `a`:
/// `((1 - a) b + a (1 - b), (1 - a) b)`.
pub fn threshold_losses(a: f64, b: f64) -> Result<(f64, f64)> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(name, format!("{v} is not in [0, 1]")));
        }
    }
    Ok(((1.0 - a) * b + a * (1.0 - b), (1.0 - a) * b))
}

fn push_pair(primary: &mut Vec<f64>, secondary: &mut Vec<f64>, a: f64, b: &[f64]) -> Result<()> {
    for &bh in b {
        let (l1, l2) = threshold_losses(a, bh)?;
        primary.push(l1);
        secondary.push(l2);
    }
    Ok(())
}

/// Two experts, two phases, two worlds drawn with equal probability from
/// `seed`; `c = 1/16`. Phase one has `ceil(T/2)` rounds. World 1 changes the
/// label rate and both experts' thresholds in phase two; world 2 does not.
pub fn build_theorem1(horizon: usize, seed: u64) -> Result<BuiltStream> {
    if horizon < 2 {
        return Err(invalid("T", "must be at least 2"));
    }
    let world = if ChaCha8Rng::seed_from_u64(seed).random::<bool>() { 1 } else { 2 };
    let phase1 = horizon.div_ceil(2);
    let (mut primary, mut secondary) = (Vec::with_capacity(2 * horizon), Vec::with_capacity(2 * horizon));
    for t in 1..=horizon {
        let (a, b) = match (t <= phase1, world) {
            (true, _) | (false, 2) => (5.0 / 8.0, [1.0 / 6.0, 0.0]),
            _ => (3.0 / 4.0, [0.0, 0.5]),
        };
        push_pair(&mut primary, &mut secondary, a, &b)?;
    }
    Ok(BuiltStream {
        stream: ObliviousStream::from_flat(2, primary, secondary)?,
        c: 1.0 / 16.0,
        delta: None,
        world: Some(WorldDraw { index: world, clamped: false, events_held: true }),
    })
}

/// Three phases of `m = ceil(T^alpha)`, `m` and `T - 2m` rounds with label
/// rate `3/4`: expert one is the always-negative predictor in phase one,
/// expert two in phase two. `c = 0`, and `delta = 1/4` makes the interval
/// bound hold with equality.
pub fn build_theorem2(horizon: usize, alpha: f64) -> Result<BuiltStream> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} is not in [0, 1]")));
    }
    let m = ceil_pow(horizon, alpha);
    if horizon <= 2 * m {
        return Err(invalid("T", format!("{horizon} must exceed 2 ceil(T^alpha) = {}", 2 * m)));
    }
    let (mut primary, mut secondary) = (Vec::with_capacity(2 * horizon), Vec::with_capacity(2 * horizon));
    for t in 1..=horizon {
        let b = if t <= m {
            [1.0, 0.0]
        } else if t <= 2 * m {
            [0.0, 1.0]
        } else {
            [0.0, 0.0]
        };
        push_pair(&mut primary, &mut secondary, 0.75, &b)?;
    }
    Ok(BuiltStream { stream: ObliviousStream::from_flat(2, primary, secondary)?, c: 0.0, delta: Some(0.25), world: None })
}
