//! Regret metrics, switch counting and the bounded-variance checkers.
//!
//! Every regret value comes in two forms: the raw difference and the value
//! floored at 1 (`max(raw, 1)`), which is what the bounds talk about.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::stream::LossStream;
use crate::trace::RunTrace;
use crate::types::{AssumptionParams, ExpertId, TOLERANCE};

/// Which algorithm loss enters a regret: `p_t . l_t` or `l_{t,A_t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Expected,
    Realized,
}

fn floor_one(raw: f64) -> f64 {
    raw.max(1.0)
}

/// Best expert in hindsight for the primary loss, lowest index on ties.
pub fn best_expert(trace: &RunTrace) -> Result<ExpertId> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let totals = &trace.totals().expert_primary;
    let mut best = 0;
    for (h, &l) in totals.iter().enumerate() {
        if l < totals[best] {
            best = h;
        }
    }
    Ok(ExpertId(best))
}

/// `L1_{T,A} - min_h L1_{T,h}` without the floor.
pub fn regret_primary_raw(trace: &RunTrace, flavor: Flavor) -> Result<f64> {
    let best = best_expert(trace)?;
    let totals = trace.totals();
    let alg = match flavor {
        Flavor::Expected => totals.expected_primary,
        Flavor::Realized => totals.realized_primary,
    };
    Ok(alg - totals.expert_primary[best.0])
}

pub fn regret_primary(trace: &RunTrace, flavor: Flavor) -> Result<f64> {
    regret_primary_raw(trace, flavor).map(floor_one)
}

/// `L2_{T,A} - cT` without the floor.
pub fn regret_secondary_raw(trace: &RunTrace, c: f64, flavor: Flavor) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid("c", format!("{c} is outside [0, 1]")));
    }
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let totals = trace.totals();
    let alg = match flavor {
        Flavor::Expected => totals.expected_secondary,
        Flavor::Realized => totals.realized_secondary,
    };
    Ok(alg - c * trace.len() as f64)
}

pub fn regret_secondary(trace: &RunTrace, c: f64, flavor: Flavor) -> Result<f64> {
    regret_secondary_raw(trace, c, flavor).map(floor_one)
}

/// Sleeping regret against `target`, summed over the rounds where it is
/// active, using the expected algorithm loss. Returns `(raw, active_rounds)`.
pub fn sleeping_regret_raw(trace: &RunTrace, target: ExpertId) -> Result<(f64, usize)> {
    ExpertId::checked(target.0, trace.num_experts())?;
    let mut raw = 0.0;
    let mut active_rounds = 0;
    for r in trace.rounds().filter(|r| r.is_active(target)) {
        active_rounds += 1;
        let alg: f64 = (0..r.primary.len()).filter(|&h| r.active[h]).map(|h| r.distribution[h] * r.primary[h]).sum();
        raw += alg - r.primary[target.0];
    }
    Ok((raw, active_rounds))
}

pub fn sleeping_regret(trace: &RunTrace, target: ExpertId) -> Result<f64> {
    sleeping_regret_raw(trace, target).map(|(raw, _)| floor_one(raw))
}

/// Number of rounds `t >= 2` with `A_t != A_{t-1}`.
pub fn count_switches(trace: &RunTrace) -> usize {
    trace.selections().windows(2).filter(|w| w[0] != w[1]).count()
}

/// A maximal-excess interval `[start, end]` (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalExcess {
    pub value: f64,
    pub start: usize,
    pub end: usize,
}

/// Maximum over all intervals of `sum (x_t - c)`, with the attaining interval
/// chosen leftmost-start then shortest. Linear time: for each right end the
/// best left end sits just after the running minimum of the prefix sums.
pub fn max_interval_excess(sequence: &[f64], c: f64) -> Result<IntervalExcess> {
    if sequence.is_empty() {
        return Err(invalid("sequence", "must be nonempty"));
    }
    let mut prefix = 0.0;
    // minimum over P[0..end-1] and its leftmost position
    let mut min_prefix = 0.0;
    let mut min_pos = 0;
    let mut best = IntervalExcess { value: f64::NEG_INFINITY, start: 1, end: 1 };
    for (i, &x) in sequence.iter().enumerate() {
        let end = i + 1;
        prefix += x - c;
        let value = prefix - min_prefix;
        let start = min_pos + 1;
        if value > best.value || (value == best.value && start < best.start) {
            best = IntervalExcess { value, start, end };
        }
        if prefix < min_prefix {
            min_prefix = prefix;
            min_pos = end;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertCheck {
    pub expert: ExpertId,
    pub pass: bool,
    pub worst: IntervalExcess,
}

/// Interval bound per expert: passes iff the worst interval excess of the
/// expert's secondary losses is at most `delta * ceil(T^alpha)`.
pub fn check_assumption2(stream: &LossStream, params: &AssumptionParams) -> Result<Vec<ExpertCheck>> {
    let stream = stream.as_oblivious()?;
    let threshold = params.threshold(stream.horizon());
    (0..stream.num_experts())
        .map(|h| {
            let expert = ExpertId(h);
            let worst = max_interval_excess(&stream.secondary_column(expert), params.c)?;
            Ok(ExpertCheck { expert, pass: worst.value <= threshold + TOLERANCE, worst })
        })
        .collect()
}

/// Maximal run of a constant realized selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub expert: ExpertId,
    pub start: usize,
    pub end: usize,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentCheck {
    pub pass: bool,
    pub worst: Segment,
}

/// Splits a trace into maximal constant-selection segments.
pub fn selection_segments(trace: &RunTrace, c: f64) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for r in trace.rounds() {
        let excess = r.secondary[r.selection.0] - c;
        match out.last_mut() {
            Some(seg) if seg.expert == r.selection => {
                seg.end = r.t;
                seg.excess += excess;
            }
            _ => out.push(Segment { expert: r.selection, start: r.t, end: r.t, excess }),
        }
    }
    out
}

/// Segment bound: every constant-selection segment's summed excess is at most
/// `delta * ceil(T^alpha)`.
pub fn check_assumption2_prime(trace: &RunTrace, params: &AssumptionParams) -> Result<SegmentCheck> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let threshold = params.threshold(trace.len());
    let segments = selection_segments(trace, params.c);
    let mut worst = segments[0];
    for seg in &segments[1..] {
        if seg.excess > worst.excess {
            worst = *seg;
        }
    }
    Ok(SegmentCheck { pass: worst.excess <= threshold + TOLERANCE, worst })
}

/// Every metric of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub reg1_expected: f64,
    pub reg1_realized: f64,
    pub reg2c_expected: f64,
    pub reg2c_realized: f64,
    pub reg1_expected_raw: f64,
    pub reg1_realized_raw: f64,
    pub reg2c_expected_raw: f64,
    pub reg2c_realized_raw: f64,
    pub best_expert: ExpertId,
    /// Floored sleeping regret per expert.
    pub sleeping: Vec<f64>,
    pub sleeping_raw: Vec<f64>,
    /// `T_{h*}`: rounds each expert was active.
    pub active_rounds: Vec<usize>,
    pub switches: usize,
}

impl RegretReport {
    pub fn from_trace(trace: &RunTrace, c: f64) -> Result<Self> {
        let reg1_expected_raw = regret_primary_raw(trace, Flavor::Expected)?;
        let reg1_realized_raw = regret_primary_raw(trace, Flavor::Realized)?;
        let reg2c_expected_raw = regret_secondary_raw(trace, c, Flavor::Expected)?;
        let reg2c_realized_raw = regret_secondary_raw(trace, c, Flavor::Realized)?;
        let mut sleeping = Vec::with_capacity(trace.num_experts());
        let mut sleeping_raw = Vec::with_capacity(trace.num_experts());
        let mut active_rounds = Vec::with_capacity(trace.num_experts());
        for h in 0..trace.num_experts() {
            let (raw, n) = sleeping_regret_raw(trace, ExpertId(h))?;
            sleeping.push(floor_one(raw));
            sleeping_raw.push(raw);
            active_rounds.push(n);
        }
        Ok(RegretReport {
            reg1_expected: floor_one(reg1_expected_raw),
            reg1_realized: floor_one(reg1_realized_raw),
            reg2c_expected: floor_one(reg2c_expected_raw),
            reg2c_realized: floor_one(reg2c_realized_raw),
            reg1_expected_raw,
            reg1_realized_raw,
            reg2c_expected_raw,
            reg2c_realized_raw,
            best_expert: best_expert(trace)?,
            sleeping,
            sleeping_raw,
            active_rounds,
            switches: count_switches(trace),
        })
    }

    /// `max(Reg1, Reg2_c)` in the expected flavor.
    pub fn bicriteria(&self) -> f64 {
        self.reg1_expected.max(self.reg2c_expected)
    }
}
