use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::learners::{FllVariant, LearnerKind};
use crate::sleeping::Reactivation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// A base learner run directly with horizon `T`.
    Plain(LearnerKind),
    Asl(LearnerKind),
    A1(LearnerKind),
    A2,
    /// Fresh copies of the first sleeping algorithm started at each
    /// reactivation round.
    RestartA1(LearnerKind),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Plain(k) => write!(f, "{k}"),
            Algorithm::Asl(k) => write!(f, "asl:{k}"),
            Algorithm::A1(k) => write!(f, "a1:{k}"),
            Algorithm::A2 => f.write_str("a2"),
            Algorithm::RestartA1(LearnerKind::Sd) => f.write_str("restart-a1"),
            Algorithm::RestartA1(k) => write!(f, "restart-a1:{k}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, base) = match s.split_once(':') {
            Some((h, b)) => (h, Some(b.parse::<LearnerKind>()?)),
            None => (s, None),
        };
        match (head, base) {
            ("asl", Some(b)) => Ok(Algorithm::Asl(b)),
            ("a1", Some(b)) => Ok(Algorithm::A1(b)),
            ("a1", None) => Ok(Algorithm::A1(LearnerKind::Sd)),
            ("a2", None) => Ok(Algorithm::A2),
            ("restart-a1", b) => Ok(Algorithm::RestartA1(b.unwrap_or(LearnerKind::Sd))),
            (plain, None) => plain.parse().map(Algorithm::Plain).map_err(|_| unknown_algorithm(s)),
            _ => Err(unknown_algorithm(s)),
        }
    }
}

fn unknown_algorithm(s: &str) -> Error {
    invalid("algorithm", format!("unknown algorithm `{s}`"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Adversary {
    Theorem1,
    Theorem2,
    AdaptiveLb,
    AppendixB,
    LinK,
    RandomGood,
    File(PathBuf),
}

impl Adversary {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Adversary::AdaptiveLb)
    }
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::Theorem1 => f.write_str("theorem1"),
            Adversary::Theorem2 => f.write_str("theorem2"),
            Adversary::AdaptiveLb => f.write_str("adaptive-lb"),
            Adversary::AppendixB => f.write_str("appendixB"),
            Adversary::LinK => f.write_str("linK"),
            Adversary::RandomGood => f.write_str("random-good"),
            Adversary::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for Adversary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Adversary::File(PathBuf::from(path)));
        }
        match s {
            "theorem1" => Ok(Adversary::Theorem1),
            "theorem2" => Ok(Adversary::Theorem2),
            "adaptive-lb" => Ok(Adversary::AdaptiveLb),
            "appendixB" => Ok(Adversary::AppendixB),
            "linK" => Ok(Adversary::LinK),
            "random-good" => Ok(Adversary::RandomGood),
            other => Err(invalid("adversary", format!("unknown adversary `{other}`"))),
        }
    }
}

/// Seeds as `a..b` (half-open), `a..=b`, or a comma/space separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let num = |v: &str| v.trim().parse::<u64>().map_err(|_| invalid("seeds", format!("cannot parse `{v}`")));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|v| !v.is_empty()).map(num).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(invalid("seeds", "no seeds given"));
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub adversary: Adversary,
    pub horizon: usize,
    pub alpha: f64,
    pub delta: f64,
    pub c: f64,
    pub k: usize,
    pub eta: Option<f64>,
    pub reactivation: Reactivation,
    pub fll_variant: FllVariant,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Asl(LearnerKind::Sd),
            adversary: Adversary::RandomGood,
            horizon: 4096,
            alpha: 0.5,
            delta: 0.5,
            c: 0.5,
            k: 2,
            eta: None,
            reactivation: Reactivation::Never,
            fll_variant: FllVariant::default(),
            seeds: (0..10).collect(),
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Flat `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, reason: format!("expected `key = value`, got `{line}`") })?;
            config.set(key.trim(), value.trim()).map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(name: &'static str, v: &str) -> Result<T> {
            v.parse().map_err(|_| invalid(name, format!("cannot parse `{v}`")))
        }
        match key {
            "algorithm" => self.algorithm = value.parse()?,
            "adversary" => self.adversary = value.parse()?,
            "T" => self.horizon = num("T", value)?,
            "alpha" => self.alpha = num("alpha", value)?,
            "delta" => self.delta = num("delta", value)?,
            "c" => self.c = num("c", value)?,
            "K" => self.k = num("K", value)?,
            "eta" => self.eta = if value.is_empty() || value == "auto" { None } else { Some(num("eta", value)?) },
            "reactivation" => self.reactivation = value.parse()?,
            "fll_variant" => self.fll_variant = value.parse()?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            other => return Err(invalid("config", format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("T", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(invalid("K", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("{} is not in [0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid("delta", format!("{} is not in [0, 1]", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(invalid("c", format!("{} is not in [0, 1]", self.c)));
        }
        if let Some(eta) = self.eta {
            if !(std::f64::consts::FRAC_1_SQRT_2..1.0).contains(&eta) {
                return Err(invalid("eta", format!("{eta} is not in [1/sqrt(2), 1)")));
            }
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "no seeds given"));
        }
        Ok(())
    }
}
