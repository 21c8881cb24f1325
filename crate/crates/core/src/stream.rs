//! Loss streams: precomputed (oblivious) tables or adaptive generators that
//! see the learner's realized selection history.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::types::{check_unit_interval, AssumptionParams, ExpertId, LossVectorPair};

/// Immutable `T x K x 2` loss table.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliviousStream {
    k: usize,
    horizon: usize,
    primary: Vec<f64>,
    secondary: Vec<f64>,
}

impl ObliviousStream {
    /// Builds a stream from row-major `T x K` primary and secondary tables.
    pub fn from_flat(k: usize, primary: Vec<f64>, secondary: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(invalid("K", "must be at least 1"));
        }
        if primary.len() != secondary.len() || !primary.len().is_multiple_of(k) {
            return Err(invalid("stream", "primary and secondary tables must both be T x K"));
        }
        let horizon = primary.len() / k;
        if horizon == 0 {
            return Err(invalid("T", "must be at least 1"));
        }
        for t in 0..horizon {
            check_unit_interval(&primary[t * k..(t + 1) * k], t + 1)?;
            check_unit_interval(&secondary[t * k..(t + 1) * k], t + 1)?;
        }
        Ok(ObliviousStream { k, horizon, primary, secondary })
    }

    pub fn from_rounds(rounds: &[LossVectorPair]) -> Result<Self> {
        let k = rounds.first().map(LossVectorPair::num_experts).ok_or_else(|| invalid("T", "must be at least 1"))?;
        let mut primary = Vec::with_capacity(rounds.len() * k);
        let mut secondary = Vec::with_capacity(rounds.len() * k);
        for r in rounds {
            if r.num_experts() != k {
                return Err(Error::DimensionMismatch { expected: k, actual: r.num_experts() });
            }
            primary.extend_from_slice(r.primary());
            secondary.extend_from_slice(r.secondary());
        }
        Self::from_flat(k, primary, secondary)
    }

    pub fn num_experts(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Primary losses of round `t` (1-based).
    pub fn primary(&self, t: usize) -> &[f64] {
        &self.primary[(t - 1) * self.k..t * self.k]
    }

    pub fn secondary(&self, t: usize) -> &[f64] {
        &self.secondary[(t - 1) * self.k..t * self.k]
    }

    pub fn round(&self, t: usize) -> LossVectorPair {
        LossVectorPair::new(self.primary(t).to_vec(), self.secondary(t).to_vec()).expect("validated at construction")
    }

    /// Secondary losses of one expert over all rounds.
    pub fn secondary_column(&self, expert: ExpertId) -> Vec<f64> {
        (1..=self.horizon).map(|t| self.secondary(t)[expert.0]).collect()
    }

    pub fn primary_column(&self, expert: ExpertId) -> Vec<f64> {
        (1..=self.horizon).map(|t| self.primary(t)[expert.0]).collect()
    }

    /// Rounds `start..=end` as a new stream.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start == 0 || start > end || end > self.horizon {
            return Err(invalid("slice", format!("[{start}, {end}] is not within [1, {}]", self.horizon)));
        }
        let range = (start - 1) * self.k..end * self.k;
        Self::from_flat(self.k, self.primary[range.clone()].to_vec(), self.secondary[range].to_vec())
    }
}

/// Loss generator that may react to the learner's past selections.
///
/// Implementations must be deterministic functions of `(t, history)` and
/// whatever seed they were built from.
pub trait AdaptiveAdversary: Send + Sync {
    fn num_experts(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Losses of round `t` (1-based) given selections `A_1..A_{t-1}`.
    fn losses(&self, t: usize, history: &[ExpertId]) -> LossVectorPair;
}

#[derive(Clone)]
pub enum LossStream {
    Oblivious(Arc<ObliviousStream>),
    Adaptive(Arc<dyn AdaptiveAdversary>),
}

impl fmt::Debug for LossStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossStream::Oblivious(s) => write!(f, "Oblivious(K={}, T={})", s.k, s.horizon),
            LossStream::Adaptive(a) => write!(f, "Adaptive(K={}, T={})", a.num_experts(), a.horizon()),
        }
    }
}

impl From<ObliviousStream> for LossStream {
    fn from(s: ObliviousStream) -> Self {
        LossStream::Oblivious(Arc::new(s))
    }
}

impl LossStream {
    pub fn adaptive(adversary: impl AdaptiveAdversary + 'static) -> Self {
        LossStream::Adaptive(Arc::new(adversary))
    }

    pub fn num_experts(&self) -> usize {
        match self {
            LossStream::Oblivious(s) => s.num_experts(),
            LossStream::Adaptive(a) => a.num_experts(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            LossStream::Oblivious(s) => s.horizon(),
            LossStream::Adaptive(a) => a.horizon(),
        }
    }

    pub fn round(&self, t: usize, history: &[ExpertId]) -> LossVectorPair {
        match self {
            LossStream::Oblivious(s) => s.round(t),
            LossStream::Adaptive(a) => a.losses(t, history),
        }
    }

    pub fn as_oblivious(&self) -> Result<&ObliviousStream> {
        match self {
            LossStream::Oblivious(s) => Ok(s),
            LossStream::Adaptive(_) => Err(Error::AdaptiveStream),
        }
    }

    pub fn is_oblivious(&self) -> bool {
        matches!(self, LossStream::Oblivious(_))
    }
}

const STREAM_MAGIC: &str = "#bicrit-stream v1";

/// Writes the tab-separated stream format: a header line
/// `#bicrit-stream v1 K=.. T=.. c=.. delta=.. alpha=..` followed by one line
/// per round holding the K primary losses then the K secondary losses.
pub fn write_stream<W: Write>(out: &mut W, stream: &ObliviousStream, params: &AssumptionParams) -> Result<()> {
    writeln!(
        out,
        "{STREAM_MAGIC} K={} T={} c={} delta={} alpha={}",
        stream.k, stream.horizon, params.c, params.delta, params.alpha
    )?;
    let mut line = String::new();
    for t in 1..=stream.horizon {
        line.clear();
        for (i, v) in stream.primary(t).iter().chain(stream.secondary(t)).enumerate() {
            if i > 0 {
                line.push('\t');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn header_field<'a>(fields: &[&'a str], key: &str, line: usize) -> Result<&'a str> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
        .ok_or_else(|| Error::Parse { line, reason: format!("header is missing `{key}=`") })
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, reason: format!("cannot parse `{s}`") })
}

pub fn read_stream<R: BufRead>(input: R) -> Result<(ObliviousStream, AssumptionParams)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Parse { line: 1, reason: "empty file".into() })??;
    let rest = header
        .strip_prefix(STREAM_MAGIC)
        .ok_or_else(|| Error::Parse { line: 1, reason: format!("expected `{STREAM_MAGIC}` header") })?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    let k: usize = parse_num(header_field(&fields, "K", 1)?, 1)?;
    let horizon: usize = parse_num(header_field(&fields, "T", 1)?, 1)?;
    let params = AssumptionParams::new(
        parse_num(header_field(&fields, "c", 1)?, 1)?,
        parse_num(header_field(&fields, "delta", 1)?, 1)?,
        parse_num(header_field(&fields, "alpha", 1)?, 1)?,
    )?;
    let mut primary = Vec::with_capacity(k * horizon);
    let mut secondary = Vec::with_capacity(k * horizon);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line.split('\t').map(|v| parse_num::<f64>(v.trim(), i + 2)).collect::<Result<Vec<_>>>()?;
        if values.len() != 2 * k {
            return Err(Error::Parse { line: i + 2, reason: format!("expected {} values, got {}", 2 * k, values.len()) });
        }
        primary.extend_from_slice(&values[..k]);
        secondary.extend_from_slice(&values[k..]);
        rows += 1;
    }
    if rows != horizon {
        return Err(Error::Parse { line: rows + 1, reason: format!("header declares T={horizon} but {rows} rounds follow") });
    }
    Ok((ObliviousStream::from_flat(k, primary, secondary)?, params))
}
