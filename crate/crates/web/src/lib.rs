//! Browser bindings. Each export takes a JSON object of experiment settings
//! (the same keys as the CLI config file) and returns JSON.

use bicrit_core::harness::{aggregate, prepare_stream, run_algorithm, run_experiment, slope_fit, ExperimentConfig};
use bicrit_core::metrics::best_expert;
use bicrit_core::RunTrace;
use serde::Serialize;
use serde_json::{Map, Value};
use wasm_bindgen::prelude::*;

const EXTRA_KEYS: [&str; 4] = ["seed", "points", "exponents", "runs"];

fn parse_request(json: &str) -> Result<(ExperimentConfig, Map<String, Value>), String> {
    let value: Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let Value::Object(map) = value else {
        return Err("request must be a JSON object".into());
    };
    let mut config = ExperimentConfig::default();
    for (key, v) in &map {
        if EXTRA_KEYS.contains(&key.as_str()) {
            continue;
        }
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        };
        config.set(key, &text).map_err(|e| e.to_string())?;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok((config, map))
}

fn number(map: &Map<String, Value>, key: &str, default: u64) -> u64 {
    map.get(key).and_then(Value::as_u64).unwrap_or(default)
}

fn run_single(config: &ExperimentConfig, seed: u64) -> Result<(RunTrace, f64), String> {
    let prepared = prepare_stream(config, seed).map_err(|e| e.to_string())?;
    let trace = run_algorithm(config, &prepared, seed).map_err(|e| e.to_string())?;
    Ok((trace, prepared.params.c))
}

#[derive(Debug, Serialize)]
pub struct Curves {
    pub t: Vec<usize>,
    /// Running `L1_A(t) - min_h L1_h(t)` with the learner's distribution.
    pub primary_regret: Vec<f64>,
    /// Running `sum (l2_{s,A_s} - c)`.
    pub secondary_excess: Vec<f64>,
    pub switches: Vec<usize>,
    pub best_expert: usize,
}

pub fn curves_of(config: &ExperimentConfig, seed: u64, points: usize) -> Result<Curves, String> {
    let (trace, c) = run_single(config, seed)?;
    let horizon = trace.len();
    let stride = horizon.div_ceil(points.max(2)).max(1);
    let mut out = Curves {
        t: Vec::new(),
        primary_regret: Vec::new(),
        secondary_excess: Vec::new(),
        switches: Vec::new(),
        best_expert: best_expert(&trace).map_err(|e| e.to_string())?.0,
    };
    let mut experts = vec![0.0; trace.num_experts()];
    let (mut alg, mut excess, mut switches) = (0.0, 0.0, 0);
    let mut prev = None;
    for r in trace.rounds() {
        alg += r.distribution.iter().zip(r.primary).map(|(p, l)| p * l).sum::<f64>();
        experts.iter_mut().zip(r.primary).for_each(|(e, l)| *e += l);
        excess += r.secondary[r.selection.0] - c;
        if prev.is_some_and(|p| p != r.selection) {
            switches += 1;
        }
        prev = Some(r.selection);
        if r.t % stride == 0 || r.t == horizon || r.t == 1 {
            out.t.push(r.t);
            out.primary_regret.push(alg - experts.iter().copied().fold(f64::INFINITY, f64::min));
            out.secondary_excess.push(excess);
            out.switches.push(switches);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct Timeline {
    pub k: usize,
    pub horizon: usize,
    /// Per expert, the maximal `[start, end]` runs of rounds it was active.
    pub active: Vec<Vec<(usize, usize)>>,
    /// `[start, end, expert]` runs of the played expert.
    pub selections: Vec<(usize, usize, usize)>,
}

pub fn timeline_of(config: &ExperimentConfig, seed: u64) -> Result<Timeline, String> {
    let (trace, _) = run_single(config, seed)?;
    let k = trace.num_experts();
    let mut active: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    let mut selections: Vec<(usize, usize, usize)> = Vec::new();
    for r in trace.rounds() {
        for (h, runs) in active.iter_mut().enumerate() {
            if !r.active[h] {
                continue;
            }
            match runs.last_mut() {
                Some(last) if last.1 + 1 == r.t => last.1 = r.t,
                _ => runs.push((r.t, r.t)),
            }
        }
        match selections.last_mut() {
            Some(last) if last.2 == r.selection.0 => last.1 = r.t,
            _ => selections.push((r.t, r.t, r.selection.0)),
        }
    }
    Ok(Timeline { k, horizon: trace.len(), active, selections })
}

#[derive(Debug, Serialize)]
pub struct Scaling {
    pub horizons: Vec<usize>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub exponent: Option<f64>,
    pub residual: Option<f64>,
    pub failed_runs: usize,
}

pub fn scaling_of(config: &ExperimentConfig, exponents: &[u32], runs: u64) -> Result<Scaling, String> {
    let mut rows = Vec::new();
    for &e in exponents {
        let cfg = ExperimentConfig { horizon: 1usize << e, seeds: (0..runs.max(1)).collect(), ..config.clone() };
        rows.extend(run_experiment(&cfg).map_err(|e| e.to_string())?);
    }
    let agg = aggregate(&rows);
    let fit = slope_fit(&rows).ok();
    Ok(Scaling {
        horizons: agg.iter().map(|a| a.horizon).collect(),
        means: agg.iter().map(|a| a.mean).collect(),
        std_devs: agg.iter().map(|a| a.std_dev).collect(),
        exponent: fit.as_ref().map(|f| f.exponent),
        residual: fit.as_ref().map(|f| f.residual),
        failed_runs: rows.iter().filter(|r| !r.is_ok()).count(),
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    value.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsError::new(&e))
}

/// Running regret and secondary excess of one run, thinned to `points` samples.
#[wasm_bindgen]
pub fn curves(request: &str) -> Result<String, JsError> {
    to_json(parse_request(request).and_then(|(cfg, map)| curves_of(&cfg, number(&map, "seed", 0), number(&map, "points", 400) as usize)))
}

/// Active intervals per expert and the played expert over time.
#[wasm_bindgen]
pub fn timeline(request: &str) -> Result<String, JsError> {
    to_json(parse_request(request).and_then(|(cfg, map)| timeline_of(&cfg, number(&map, "seed", 0))))
}

/// Mean `max(Reg1, Reg2_c)` over `runs` seeds at `T = 2^e` for each listed `e`.
#[wasm_bindgen]
pub fn scaling(request: &str) -> Result<String, JsError> {
    to_json(parse_request(request).and_then(|(cfg, map)| {
        let exponents: Vec<u32> = match map.get("exponents") {
            Some(Value::Array(xs)) => xs.iter().filter_map(Value::as_u64).map(|e| e.min(20) as u32).collect(),
            _ => vec![8, 9, 10, 11, 12],
        };
        scaling_of(&cfg, &exponents, number(&map, "runs", 8))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_map_onto_config_keys() {
        let (cfg, map) = parse_request(r#"{"algorithm":"a2","adversary":"linK","T":3000,"K":3,"c":0,"delta":1,"seed":4}"#).unwrap();
        assert_eq!(cfg.algorithm.to_string(), "a2");
        assert_eq!((cfg.horizon, cfg.k, cfg.c, cfg.delta), (3000, 3, 0.0, 1.0));
        assert_eq!(number(&map, "seed", 0), 4);
        assert!(parse_request("[1]").is_err());
        assert!(parse_request(r#"{"colour":"red"}"#).is_err());
    }

    #[test]
    fn curves_are_thinned_and_end_at_t() {
        let (cfg, _) = parse_request(r#"{"algorithm":"asl:sd","adversary":"random-good","T":5000}"#).unwrap();
        let c = curves_of(&cfg, 1, 100).unwrap();
        assert!(c.t.len() <= 102);
        assert_eq!(*c.t.last().unwrap(), 5000);
        assert!(c.switches.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn timeline_shows_sequential_retirement() {
        let (cfg, _) = parse_request(r#"{"algorithm":"a1:sd","adversary":"linK","T":10000,"K":3,"c":0,"delta":1}"#).unwrap();
        let tl = timeline_of(&cfg, 0).unwrap();
        assert_eq!(tl.active[0], vec![(1, 101)]);
        assert_eq!(tl.active[1], vec![(1, 1001)]);
        assert_eq!(tl.active[2], vec![(1, 10_000)]);
        assert_eq!(tl.selections.last().unwrap().2, 2);
    }

    #[test]
    fn scaling_reports_a_slope() {
        let (cfg, _) = parse_request(r#"{"algorithm":"ew","adversary":"theorem1"}"#).unwrap();
        let s = scaling_of(&cfg, &[8, 9, 10, 11], 4).unwrap();
        assert_eq!(s.horizons, vec![256, 512, 1024, 2048]);
        assert!(s.exponent.is_some());
        assert_eq!(s.failed_runs, 0);
    }
}
