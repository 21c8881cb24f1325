use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::stream::ObliviousStream;
use crate::types::AssumptionParams;

const STEP: f64 = 0.1;

/// Uniform primaries and secondaries `c + amplitude * z_t` with `z` a
/// reflected walk in `[-1, 1]`, amplitude `min(c, 1 - c)`.
pub fn random_bounded_variance(horizon: usize, k: usize, params: &AssumptionParams, seed: u64) -> Result<ObliviousStream> {
    random_bounded_variance_with(horizon, k, params, params.c.min(1.0 - params.c), seed)
}

/// As [`random_bounded_variance`] with an explicit amplitude. Whenever an
/// upward excursion would push the running suffix excess past
/// `delta ceil(T^alpha)`, the secondary loss is clipped down to meet it.
pub fn random_bounded_variance_with(
    horizon: usize,
    k: usize,
    params: &AssumptionParams,
    amplitude: f64,
    seed: u64,
) -> Result<ObliviousStream> {
    if horizon == 0 || k == 0 {
        return Err(invalid("T", "T and K must be at least 1"));
    }
    let c = params.c;
    if amplitude < 0.0 || c - amplitude < 0.0 || c + amplitude > 1.0 {
        return Err(invalid("amplitude", format!("c +- {amplitude} leaves [0, 1]")));
    }
    // a hair under the threshold so re-summed intervals never round above it
    let cap = (params.threshold(horizon) - 1e-9).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walk: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut acc = vec![0.0f64; k];
    let mut primary = Vec::with_capacity(k * horizon);
    let mut secondary = Vec::with_capacity(k * horizon);
    for _ in 0..horizon {
        for h in 0..k {
            primary.push(rng.random::<f64>());
            let step = if rng.random::<bool>() { STEP } else { -STEP };
            let mut z = walk[h] + step;
            if z > 1.0 {
                z = 2.0 - z;
            } else if z < -1.0 {
                z = -2.0 - z;
            }
            walk[h] = z;
            let carried = acc[h].max(0.0);
            let x = (c + amplitude * z).min(c + cap - carried).clamp(0.0, 1.0);
            acc[h] = carried + x - c;
            secondary.push(x);
        }
    }
    ObliviousStream::from_flat(k, primary, secondary)
}
