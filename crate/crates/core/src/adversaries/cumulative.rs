use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BuiltStream, WorldDraw};
use crate::error::{invalid, Result};
use crate::stream::ObliviousStream;

pub(crate) const C: f64 = 0.5;
pub(crate) const DELTA: f64 = 0.5;

/// Interval geometry for horizon `T`: half-interval `ceil(T^beta / 2)`, and
/// as many full intervals as fit. Rounds past the last interval carry
/// `(1, c)` for both experts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layout {
    pub half: usize,
    pub intervals: usize,
    pub amplitude: f64,
}

pub(crate) fn layout(horizon: usize, alpha: f64) -> Layout {
    let beta = (1.0 + alpha) / 2.0;
    let half = ((horizon as f64).powf(beta) / 2.0 - 1e-9).ceil().max(1.0) as usize;
    Layout {
        half,
        intervals: horizon / (2 * half),
        amplitude: DELTA * (horizon as f64).powf(alpha - beta),
    }
}

/// Losses of the reference world at round `t`: in odd intervals expert one
/// has `(0, c + a)` and expert two `(1, c - a)` for the first half, then
/// `(1, c)` and `(0, c)`; even intervals swap the experts.
fn reference_round(lay: &Layout, t: usize) -> ([f64; 2], [f64; 2]) {
    let len = 2 * lay.half;
    let w = (t - 1) / len + 1;
    if w > lay.intervals {
        return ([1.0, 1.0], [C, C]);
    }
    let first_half = (t - 1) % len < lay.half;
    let a = lay.amplitude;
    let (p, s) = if first_half { ([0.0, 1.0], [C + a, C - a]) } else { ([1.0, 0.0], [C, C]) };
    if w % 2 == 1 {
        (p, s)
    } else {
        ([p[1], p[0]], [s[1], s[0]])
    }
}

/// Cumulative-loss lower-bound family: world 0 with probability 1/2, else a
/// uniform world `w` among the intervals. World `w` shares world 0's secondary
/// losses. Its primaries are fair coins up to `t' = (w-1)L - 2 sqrt((w-1) L ln T)`,
/// then a compensation block (ones first) that brings both experts to
/// `(w-1)L/2`, then world 0's first half of interval `w`, then all ones.
pub fn build_appendix_b(horizon: usize, alpha: f64, seed: u64) -> Result<BuiltStream> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} must lie in [0, 1)")));
    }
    let lay = layout(horizon, alpha);
    if lay.intervals == 0 {
        return Err(invalid("T", format!("{horizon} is shorter than one interval of {}", 2 * lay.half)));
    }
    if lay.amplitude > C {
        return Err(invalid("T", "secondary amplitude exceeds c"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = if rng.random::<bool>() { 0 } else { rng.random_range(1..=lay.intervals) };

    let mut primary = Vec::with_capacity(2 * horizon);
    let mut secondary = Vec::with_capacity(2 * horizon);
    for t in 1..=horizon {
        let (p, s) = reference_round(&lay, t);
        primary.extend_from_slice(&p);
        secondary.extend_from_slice(&s);
    }
    let mut draw = WorldDraw { index: world, clamped: false, events_held: true };
    if world > 0 {
        let len = 2 * lay.half;
        let before = (world - 1) * len;
        let slack = ((before as f64) * (horizon as f64).ln()).sqrt();
        let raw = before as f64 - 2.0 * slack;
        draw.clamped = raw < 0.0;
        let t_prime = raw.max(0.0).floor() as usize;
        let mut sums = [0.0; 2];
        for t in 1..=t_prime {
            for h in 0..2 {
                let v = if rng.random::<bool>() { 1.0 } else { 0.0 };
                primary[2 * (t - 1) + h] = v;
                sums[h] += v;
            }
        }
        draw.events_held = sums.iter().all(|s| (s - t_prime as f64 / 2.0).abs() <= slack);
        let block = before - t_prime;
        for h in 0..2 {
            let ones = if draw.events_held {
                ((before as f64 / 2.0 - sums[h]).round().max(0.0) as usize).min(block)
            } else {
                block
            };
            for (i, t) in (t_prime + 1..=before).enumerate() {
                primary[2 * (t - 1) + h] = if i < ones { 1.0 } else { 0.0 };
            }
        }
        for t in before + lay.half + 1..=horizon {
            primary[2 * (t - 1)] = 1.0;
            primary[2 * (t - 1) + 1] = 1.0;
        }
    }
    Ok(BuiltStream {
        stream: ObliviousStream::from_flat(2, primary, secondary)?,
        c: C,
        delta: Some(DELTA),
        world: Some(draw),
    })
}
