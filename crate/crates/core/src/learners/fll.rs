use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::{Protocol, Selection};
use crate::error::{invalid, Error, Result};
use crate::types::{ExpertId, SimplexDistribution};

/// How the lazy leader's perturbation is coupled across rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FllVariant {
    /// One random grid offset, fixed for the run. The perturbed point is the
    /// grid point in the cube `[L, L + scale)^K`, so the leader can only move
    /// when the cumulative losses cross a grid line.
    #[default]
    Grid,
    /// One exponential perturbation (mean `scale`) per expert, fixed for the run.
    Fixed,
}

impl FromStr for FllVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(FllVariant::Grid),
            "fixed" => Ok(FllVariant::Fixed),
            other => Err(invalid("fll_variant", format!("unknown variant `{other}`"))),
        }
    }
}

/// Follow the Lazy Leader.
#[derive(Debug, Clone)]
pub struct LazyLeader {
    scale: f64,
    variant: FllVariant,
    cumulative: Vec<f64>,
    perturbation: Vec<f64>,
    grid_point: Vec<f64>,
    held: Option<ExpertId>,
    redraws: usize,
    nodes: Vec<(f64, f64)>,
    protocol: Protocol,
}

impl LazyLeader {
    pub(super) fn new(k: usize, scale: f64, variant: FllVariant, mut rng: ChaCha8Rng) -> Self {
        let perturbation = if k == 1 || !scale.is_finite() {
            vec![0.0; k]
        } else {
            match variant {
                FllVariant::Grid => (0..k).map(|_| rng.random::<f64>() * scale).collect(),
                FllVariant::Fixed => {
                    let exp = Exp::new(1.0 / scale).expect("positive scale");
                    (0..k).map(|_| exp.sample(&mut rng)).collect()
                }
            }
        };
        LazyLeader {
            scale,
            variant,
            cumulative: vec![0.0; k],
            perturbation,
            grid_point: Vec::new(),
            held: None,
            redraws: 0,
            nodes: gauss_legendre(k / 2 + 1),
            protocol: Protocol::default(),
        }
    }

    pub fn num_experts(&self) -> usize {
        self.cumulative.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Times the leader was recomputed after the first round.
    pub fn redraws(&self) -> usize {
        self.redraws
    }

    fn degenerate(&self) -> bool {
        self.num_experts() == 1 || !self.scale.is_finite()
    }

    /// Marginal law of this round's leader over the perturbation.
    pub fn distribution(&self) -> SimplexDistribution {
        if self.degenerate() {
            return SimplexDistribution::point_mass(self.num_experts(), ExpertId(0));
        }
        let law = match self.variant {
            FllVariant::Grid => uniform_leader_law(&self.cumulative, self.scale, &self.nodes),
            FllVariant::Fixed => exponential_leader_law(&self.cumulative, self.scale, &self.nodes),
        };
        SimplexDistribution::from_weights(&law).expect("leader law has positive mass")
    }

    fn leader(&mut self) -> ExpertId {
        if self.degenerate() {
            return ExpertId(0);
        }
        match self.variant {
            FllVariant::Grid => {
                let s = self.scale;
                let point: Vec<f64> =
                    self.cumulative.iter().zip(&self.perturbation).map(|(l, o)| l + (o - l).rem_euclid(s)).collect();
                if let Some(h) = self.held {
                    if point == self.grid_point {
                        return h;
                    }
                    self.redraws += 1;
                }
                self.grid_point = point;
                argmin(&self.grid_point)
            }
            FllVariant::Fixed => {
                let scores: Vec<f64> = self.cumulative.iter().zip(&self.perturbation).map(|(l, x)| l - x).collect();
                if self.held.is_some() {
                    self.redraws += 1;
                }
                argmin(&scores)
            }
        }
    }

    pub(super) fn step(&mut self) -> Result<Selection> {
        self.protocol.begin_step()?;
        let distribution = self.distribution();
        let expert = self.leader();
        self.held = Some(expert);
        Ok(Selection { expert, distribution })
    }

    pub(super) fn observe(&mut self, losses: &[f64]) -> Result<()> {
        self.protocol.begin_observe()?;
        for (c, l) in self.cumulative.iter_mut().zip(losses) {
            *c += l;
        }
        Ok(())
    }
}

fn argmin(values: &[f64]) -> ExpertId {
    let mut best = 0;
    for (h, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = h;
        }
    }
    ExpertId(best)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`; exact for polynomials of
/// degree up to `2n - 1`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            deriv = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * deriv * deriv)));
    }
    out
}

fn integrate(nodes: &[(f64, f64)], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// `P(argmin_h (L_h + U_h) = h)` for i.i.d. `U_h ~ Uniform[0, s)`.
/// The integrand is piecewise polynomial between the points `L_j` and `L_j + s`.
pub(crate) fn uniform_leader_law(cumulative: &[f64], s: f64, nodes: &[(f64, f64)]) -> Vec<f64> {
    let k = cumulative.len();
    let survival = |j: usize, x: f64| ((cumulative[j] + s - x) / s).clamp(0.0, 1.0);
    (0..k)
        .map(|h| {
            let (lo, hi) = (cumulative[h], cumulative[h] + s);
            let mut cuts: Vec<f64> = cumulative
                .iter()
                .flat_map(|&l| [l, l + s])
                .filter(|&x| x > lo && x < hi)
                .chain([lo, hi])
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2)
                .map(|w| integrate(nodes, w[0], w[1], |x| (0..k).filter(|&j| j != h).map(|j| survival(j, x)).product()))
                .sum::<f64>()
                / s
        })
        .collect()
}

/// `P(argmin_h (L_h - X_h) = h)` for i.i.d. `X_h ~ Exp(mean s)`. With
/// `c_j = exp(-(L_j - min L) / s)` this is `c_h * int_0^1 prod_{j != h} (1 - c_j u) du`.
pub(crate) fn exponential_leader_law(cumulative: &[f64], s: f64, nodes: &[(f64, f64)]) -> Vec<f64> {
    let min = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
    let c: Vec<f64> = cumulative.iter().map(|l| (-(l - min) / s).exp()).collect();
    (0..c.len())
        .map(|h| c[h] * integrate(nodes, 0.0, 1.0, |u| (0..c.len()).filter(|&j| j != h).map(|j| 1.0 - c[j] * u).product()))
        .collect()
}
