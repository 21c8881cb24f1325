use super::{pseudo_primary, remap_repair, DeactivationOracle, ExpertMap};
use crate::error::Result;
use crate::learners::{BaseLearner, Selection};
use crate::meta::{EpochDriver, EpochSchedule};
use crate::stream::{LossStream, ObliviousStream};
use crate::trace::{RunTrace, TraceBuilder};
use crate::types::{ceil_pow, AssumptionParams, LossVectorPair};

/// Runs the meta-algorithm on pseudo primary losses under the
/// never-reactivating oracle, playing `f(h_t)` for the learner's `h_t`.
///
/// The trace stores `h_t` as the base selection, `f(h_t)` as the selection,
/// and the push-forward of the learner's distribution through `f`.
pub fn a1_run(stream: &LossStream, params: &AssumptionParams, base: impl Into<BaseLearner>, seed: u64) -> Result<RunTrace> {
    let stream = stream.as_oblivious()?;
    let horizon = stream.horizon();
    let mut builder = TraceBuilder::with_capacity(stream.num_experts(), horizon);
    a1_block(&base.into(), stream, 1, horizon, params, seed, &mut builder)?;
    Ok(builder.finish())
}

/// One fresh run over rounds `start..=end`, appended to `builder`. Epoch
/// length and threshold come from the full horizon.
pub(crate) fn a1_block(
    base: &BaseLearner,
    stream: &ObliviousStream,
    start: usize,
    end: usize,
    params: &AssumptionParams,
    seed: u64,
    builder: &mut TraceBuilder,
) -> Result<()> {
    let k = stream.num_experts();
    let horizon = stream.horizon();
    let len = end - start + 1;
    let schedule = EpochSchedule::with_length(len, ceil_pow(horizon, params.alpha));
    let mut driver = EpochDriver::new(base, k, schedule, seed)?;
    let mut oracle = DeactivationOracle::with_threshold(k, len, params.c, params.threshold(horizon), &[]);
    let mut map = ExpertMap::identity(k);
    for t in start..=end {
        let local = t - start + 1;
        oracle.begin_round(local);
        let Selection { expert, distribution } = driver.select(local)?;
        let (expert, shown) = (*expert, distribution.push_forward(map.as_slice()));
        let losses = LossVectorPair::new(stream.primary(t).to_vec(), stream.secondary(t).to_vec())?;
        builder.push(&shown, map.get(expert), Some(expert), &losses, oracle.active())?;
        driver.feed(local, &pseudo_primary(losses.primary(), oracle.active()))?;
        let removed = oracle.end_round(local, losses.secondary()).map_err(|e| shift_round(e, start))?;
        remap_repair(&mut map, &removed, oracle.active(), t)?;
    }
    Ok(())
}

fn shift_round(e: crate::Error, start: usize) -> crate::Error {
    match e {
        crate::Error::OracleStarved { round } => crate::Error::OracleStarved { round: round + start - 1 },
        other => other,
    }
}
