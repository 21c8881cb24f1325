use std::collections::BTreeMap;

use serde::Serialize;

use super::SummaryRow;
use crate::error::{invalid, Result};

/// Mean and sample standard deviation of `max(Reg1, Reg2_c)` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub horizon: usize,
    pub runs: usize,
    pub mean: f64,
    pub std_dev: f64,
}

/// Groups successful rows by `T`, ascending.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.is_ok()) {
        if let Some(v) = row.bicriteria() {
            groups.entry(row.horizon).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(horizon, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            Aggregate { horizon, runs: values.len(), mean, std_dev: var.sqrt() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log units.
    pub residual: f64,
    pub points: Vec<Aggregate>,
}

/// Least-squares line through `(ln x, ln y)`; returns (slope, intercept, rms residual).
pub fn slope_fit_points(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(invalid("points", "need at least 2 points"));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(invalid("points", "coordinates must be positive"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "x values are all equal"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Growth exponent of the mean bicriteria regret in `T`. Needs at least four
/// distinct horizons.
pub fn slope_fit(rows: &[SummaryRow]) -> Result<SlopeFit> {
    let points = aggregate(rows);
    if points.len() < 4 {
        return Err(invalid("rows", format!("need at least 4 distinct T values, got {}", points.len())));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|a| (a.horizon as f64, a.mean)).collect();
    let (exponent, intercept, residual) = slope_fit_points(&xy)?;
    Ok(SlopeFit { exponent, intercept, residual, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(horizon: usize, reg: f64, adversary: &str) -> SummaryRow {
        SummaryRow {
            seed: 0,
            horizon,
            k: 2,
            alpha: 0.5,
            delta: 0.5,
            c: 0.5,
            algorithm: "sd".into(),
            adversary: adversary.into(),
            world: None,
            status: "ok".into(),
            reg1_expected: Some(reg),
            reg1_realized: Some(1.0),
            reg2c_expected: Some(1.0),
            reg2c_realized: Some(reg / 2.0),
            switches: Some(0),
            assumption2_pass: Some(true),
            assumption2prime_pass: Some(true),
            sreg_max: Some(1.0),
            active_rounds_min: Some(horizon),
        }
    }

    #[test]
    fn linear_and_square_root() {
        let ts = [1024, 4096, 16384, 65536];
        let lin: Vec<_> = ts.iter().map(|&t| row(t, t as f64, "theorem1")).collect();
        let fit = slope_fit(&lin).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-9 && fit.residual < 1e-9);
        let root: Vec<_> = ts.iter().map(|&t| row(t, (t as f64).sqrt(), "theorem1")).collect();
        assert!((slope_fit(&root).unwrap().exponent - 0.5).abs() < 1e-9);
    }

    #[test]
    fn adaptive_rows_use_realized_values() {
        let ts = [1024, 4096, 16384, 65536];
        let rows: Vec<_> = ts.iter().map(|&t| row(t, 8.0 * (t as f64).powf(0.75), "adaptive-lb")).collect();
        assert!((slope_fit(&rows).unwrap().exponent - 0.75).abs() < 1e-9);
    }

    #[test]
    fn averages_seeds_and_skips_failures() {
        let mut rows = vec![row(100, 10.0, "x"), row(100, 30.0, "x"), row(200, 5.0, "x")];
        rows[2].status = "infeasible".into();
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 1);
        assert_eq!((agg[0].mean, agg[0].runs), (20.0, 2));
        assert!((agg[0].std_dev - 200f64.sqrt()).abs() < 1e-12);
        assert!(slope_fit(&rows).is_err());
    }

    #[test]
    fn residual_measures_scatter() {
        let (s, _, r) = slope_fit_points(&[(1.0, 1.0), (std::f64::consts::E, std::f64::consts::E.powi(2)), (std::f64::consts::E.powi(2), std::f64::consts::E.powi(2))]).unwrap();
        // ln points (0,0), (1,2), (2,2): slope 1, intercept 1/3, residuals -1/3, 2/3, -1/3
        assert!((s - 1.0).abs() < 1e-12);
        assert!((r - (6.0f64 / 27.0).sqrt()).abs() < 1e-12);
    }
}
