//! Run traces: the full per-round record of one algorithm run, plus the
//! line-oriented text export.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::types::{ActiveSet, ExpertId, LossVectorPair, SimplexDistribution, TOLERANCE};

/// Cumulative losses maintained incrementally while a trace is built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CumulativeLosses {
    /// `L1_{t,h}` per expert.
    pub expert_primary: Vec<f64>,
    /// `L2_{t,h}` per expert.
    pub expert_secondary: Vec<f64>,
    /// Sum of `p_t . l1_t`.
    pub expected_primary: f64,
    pub expected_secondary: f64,
    /// Sum of `l1_{t,A_t}`.
    pub realized_primary: f64,
    pub realized_secondary: f64,
}

impl CumulativeLosses {
    fn new(k: usize) -> Self {
        CumulativeLosses { expert_primary: vec![0.0; k], expert_secondary: vec![0.0; k], ..Default::default() }
    }

    fn add(&mut self, distribution: &[f64], selection: ExpertId, primary: &[f64], secondary: &[f64]) {
        for h in 0..primary.len() {
            self.expert_primary[h] += primary[h];
            self.expert_secondary[h] += secondary[h];
            self.expected_primary += distribution[h] * primary[h];
            self.expected_secondary += distribution[h] * secondary[h];
        }
        self.realized_primary += primary[selection.0];
        self.realized_secondary += secondary[selection.0];
    }

    pub fn approx_eq(&self, other: &CumulativeLosses, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        self.expert_primary.len() == other.expert_primary.len()
            && self.expert_primary.iter().zip(&other.expert_primary).all(|(a, b)| close(*a, *b))
            && self.expert_secondary.iter().zip(&other.expert_secondary).all(|(a, b)| close(*a, *b))
            && close(self.expected_primary, other.expected_primary)
            && close(self.expected_secondary, other.expected_secondary)
            && close(self.realized_primary, other.realized_primary)
            && close(self.realized_secondary, other.realized_secondary)
    }
}

/// Borrowed view of one recorded round.
#[derive(Debug, Clone, Copy)]
pub struct RoundView<'a> {
    pub t: usize,
    pub distribution: &'a [f64],
    pub selection: ExpertId,
    /// Expert proposed by the inner learner before any remapping, when recorded.
    pub base_selection: Option<ExpertId>,
    pub primary: &'a [f64],
    pub secondary: &'a [f64],
    pub active: &'a [bool],
}

impl RoundView<'_> {
    pub fn is_active(&self, expert: ExpertId) -> bool {
        self.active[expert.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    k: usize,
    distributions: Vec<f64>,
    selections: Vec<ExpertId>,
    base_selections: Vec<ExpertId>,
    primary: Vec<f64>,
    secondary: Vec<f64>,
    active: Vec<bool>,
    totals: CumulativeLosses,
}

impl RunTrace {
    pub fn num_experts(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.selections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selections.is_empty()
    }

    pub fn selections(&self) -> &[ExpertId] {
        &self.selections
    }

    /// Inner-learner selections (`h_t` before the expert map), empty when the
    /// producing algorithm does not remap.
    pub fn base_selections(&self) -> &[ExpertId] {
        &self.base_selections
    }

    pub fn totals(&self) -> &CumulativeLosses {
        &self.totals
    }

    /// Round `t` (1-based).
    pub fn round(&self, t: usize) -> RoundView<'_> {
        let k = self.k;
        let span = (t - 1) * k..t * k;
        RoundView {
            t,
            distribution: &self.distributions[span.clone()],
            selection: self.selections[t - 1],
            base_selection: self.base_selections.get(t - 1).copied(),
            primary: &self.primary[span.clone()],
            secondary: &self.secondary[span.clone()],
            active: &self.active[span],
        }
    }

    pub fn rounds(&self) -> impl Iterator<Item = RoundView<'_>> + '_ {
        (1..=self.len()).map(move |t| self.round(t))
    }

    /// Realized secondary losses `l2_{t,A_t}`.
    pub fn realized_secondary(&self) -> Vec<f64> {
        self.rounds().map(|r| r.secondary[r.selection.0]).collect()
    }

    /// Recomputes the cumulative sums from the stored per-round records.
    pub fn recompute_totals(&self) -> CumulativeLosses {
        let mut totals = CumulativeLosses::new(self.k);
        for r in self.rounds() {
            totals.add(r.distribution, r.selection, r.primary, r.secondary);
        }
        totals
    }
}

/// Accumulates rounds for a single producing run.
#[derive(Debug)]
pub struct TraceBuilder {
    trace: RunTrace,
}

impl TraceBuilder {
    pub fn new(k: usize) -> Self {
        TraceBuilder {
            trace: RunTrace {
                k,
                distributions: Vec::new(),
                selections: Vec::new(),
                base_selections: Vec::new(),
                primary: Vec::new(),
                secondary: Vec::new(),
                active: Vec::new(),
                totals: CumulativeLosses::new(k),
            },
        }
    }

    pub fn with_capacity(k: usize, horizon: usize) -> Self {
        let mut b = Self::new(k);
        let n = k * horizon;
        b.trace.distributions.reserve(n);
        b.trace.primary.reserve(n);
        b.trace.secondary.reserve(n);
        b.trace.active.reserve(n);
        b.trace.selections.reserve(horizon);
        b
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn selections(&self) -> &[ExpertId] {
        &self.trace.selections
    }

    /// Appends one round, checking `A_t` in `H_t` and zero mass outside `H_t`.
    pub fn push(
        &mut self,
        distribution: &SimplexDistribution,
        selection: ExpertId,
        base_selection: Option<ExpertId>,
        losses: &LossVectorPair,
        active: &ActiveSet,
    ) -> Result<()> {
        let k = self.trace.k;
        let round = self.trace.len() + 1;
        for n in [distribution.num_experts(), losses.num_experts(), active.num_experts()] {
            if n != k {
                return Err(Error::DimensionMismatch { expected: k, actual: n });
            }
        }
        ExpertId::checked(selection.0, k)?;
        if !active.contains(selection) {
            return Err(Error::MalformedTrace { round, reason: format!("selection {selection} is not active") });
        }
        if !distribution.is_supported_on(active) {
            return Err(Error::MalformedTrace { round, reason: "distribution has mass on inactive experts".into() });
        }
        let tr = &mut self.trace;
        if let Some(b) = base_selection {
            if tr.base_selections.len() != round - 1 {
                return Err(Error::MalformedTrace { round, reason: "base selections recorded for only some rounds".into() });
            }
            tr.base_selections.push(ExpertId::checked(b.0, k)?);
        }
        tr.distributions.extend_from_slice(distribution.probabilities());
        tr.selections.push(selection);
        tr.primary.extend_from_slice(losses.primary());
        tr.secondary.extend_from_slice(losses.secondary());
        tr.active.extend_from_slice(active.flags());
        tr.totals.add(distribution.probabilities(), selection, losses.primary(), losses.secondary());
        Ok(())
    }

    pub fn finish(self) -> RunTrace {
        self.trace
    }
}

const TRACE_MAGIC: &str = "#bicrit-trace v1";

/// One parsed line of the text export.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub t: usize,
    pub selection: ExpertId,
    pub active: ActiveSet,
    pub primary: f64,
    pub secondary: f64,
}

/// Writes `#bicrit-trace v1 K=<K> T=<T>` then `t, A_t, active-mask (hex),
/// l1_{t,A_t}, l2_{t,A_t}` per round, tab separated.
pub fn write_trace<W: Write>(out: &mut W, trace: &RunTrace) -> Result<()> {
    writeln!(out, "{TRACE_MAGIC} K={} T={}", trace.k, trace.len())?;
    for r in trace.rounds() {
        let a = r.selection.0;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.t,
            a,
            ActiveSet::from_flags(r.active.to_vec()).to_hex(),
            r.primary[a],
            r.secondary[a]
        )?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<(usize, Vec<TraceLine>)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Parse { line: 1, reason: "empty file".into() })??;
    let rest = header
        .strip_prefix(TRACE_MAGIC)
        .ok_or_else(|| Error::Parse { line: 1, reason: format!("expected `{TRACE_MAGIC}` header") })?;
    let mut k = None;
    let mut horizon = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("K=") {
            k = v.parse::<usize>().ok();
        } else if let Some(v) = field.strip_prefix("T=") {
            horizon = v.parse::<usize>().ok();
        }
    }
    let (k, horizon) = match (k, horizon) {
        (Some(k), Some(t)) => (k, t),
        _ => return Err(Error::Parse { line: 1, reason: "header needs K= and T=".into() }),
    };
    let mut out = Vec::with_capacity(horizon);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        let bad = |reason: &str| Error::Parse { line: n, reason: reason.to_string() };
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 5 {
            return Err(bad("expected 5 tab-separated fields"));
        }
        let t = parts[0].parse().map_err(|_| bad("round"))?;
        let a: usize = parts[1].parse().map_err(|_| bad("selection"))?;
        let active = ActiveSet::from_hex(parts[2], k).ok_or_else(|| bad("active mask"))?;
        out.push(TraceLine {
            t,
            selection: ExpertId::checked(a, k)?,
            active,
            primary: parts[3].parse().map_err(|_| bad("primary loss"))?,
            secondary: parts[4].parse().map_err(|_| bad("secondary loss"))?,
        });
    }
    if out.len() != horizon {
        return Err(Error::Parse { line: out.len() + 1, reason: format!("header declares T={horizon}") });
    }
    Ok((k, out))
}

/// Checks the recorded cumulative sums against a recomputation from raw rounds.
pub fn totals_consistent(trace: &RunTrace) -> bool {
    trace.totals().approx_eq(&trace.recompute_totals(), TOLERANCE)
}
