use bicrit_core::adversaries::{build_link, random_bounded_variance};
use bicrit_core::learners::{sd_epsilon, LearnerKind};
use bicrit_core::meta::{asl_run, epoch_schedule, run_learner};
use bicrit_core::metrics::{
    check_assumption2, check_assumption2_prime, count_switches, max_interval_excess, regret_primary, regret_secondary,
    sleeping_regret, Flavor,
};
use bicrit_core::sleeping::{a1_run, a2_run, pseudo_primary, A2Options, ActiveSetTimeline, Reactivation};
use bicrit_core::trace::{totals_consistent, write_trace};
use bicrit_core::{ActiveSet, AssumptionParams, ExpertId, LossStream, ObliviousStream, RunTrace, SimplexDistribution, TraceBuilder};
use proptest::prelude::*;

fn brute_max_excess(xs: &[f64], c: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for s in 0..xs.len() {
        let mut acc = 0.0;
        for x in &xs[s..] {
            acc += x - c;
            best = best.max(acc);
        }
    }
    best
}

/// First round whose trailing-interval excess passes the threshold, by
/// direct summation over every start.
fn brute_first_crossing(xs: &[f64], c: f64, thr: f64) -> Option<usize> {
    (1..=xs.len()).find(|&t| (0..t).any(|s| xs[s..t].iter().map(|x| x - c).sum::<f64>() > thr + 1e-9))
}

fn stream_strategy(max_k: usize, max_t: usize) -> impl Strategy<Value = ObliviousStream> {
    (1..=max_k, 1..=max_t).prop_flat_map(|(k, t)| {
        (prop::collection::vec(0.0..=1.0f64, k * t), prop::collection::vec(0.0..=1.0f64, k * t))
            .prop_map(move |(p, s)| ObliviousStream::from_flat(k, p, s).unwrap())
    })
}

fn binary_stream(max_k: usize, max_t: usize) -> impl Strategy<Value = ObliviousStream> {
    (1..=max_k, 1..=max_t).prop_flat_map(|(k, t)| {
        (prop::collection::vec(0u8..=1, k * t), prop::collection::vec(0u8..=1, k * t)).prop_map(move |(p, s)| {
            let f = |v: Vec<u8>| v.into_iter().map(f64::from).collect();
            ObliviousStream::from_flat(k, f(p), f(s)).unwrap()
        })
    })
}

/// A trace that plays `selections` against `stream` with a random
/// distribution each round.
fn arbitrary_trace(stream: &ObliviousStream, selections: &[usize], weights: &[f64]) -> RunTrace {
    let k = stream.num_experts();
    let mut b = TraceBuilder::new(k);
    for t in 1..=stream.horizon() {
        let w: Vec<f64> = (0..k).map(|h| weights[((t - 1) * k + h) % weights.len()] + 1e-3).collect();
        let d = SimplexDistribution::from_weights(&w).unwrap();
        b.push(&d, ExpertId(selections[(t - 1) % selections.len()] % k), None, &stream.round(t), &ActiveSet::full(k))
            .unwrap();
    }
    b.finish()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn interval_scan_matches_brute_force_on_integers(xs in prop::collection::vec(-5i32..=5, 1..120), c in -3i32..=3) {
        let seq: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
        let scan = max_interval_excess(&seq, f64::from(c)).unwrap();
        prop_assert_eq!(scan.value, brute_max_excess(&seq, f64::from(c)));
        let attained: f64 = seq[scan.start - 1..scan.end].iter().map(|x| x - f64::from(c)).sum();
        prop_assert_eq!(attained, scan.value);
    }

    #[test]
    fn interval_scan_matches_brute_force_on_reals(xs in prop::collection::vec(0.0..=1.0f64, 1..300), c in 0.0..=1.0f64) {
        let scan = max_interval_excess(&xs, c).unwrap();
        prop_assert!((scan.value - brute_max_excess(&xs, c)).abs() <= 1e-9);
    }

    #[test]
    fn regrets_are_floored_and_totals_consistent(
        stream in stream_strategy(4, 60),
        selections in prop::collection::vec(0usize..4, 1..20),
        weights in prop::collection::vec(0.0..1.0f64, 1..30),
        c in 0.0..=1.0f64,
    ) {
        let trace = arbitrary_trace(&stream, &selections, &weights);
        for flavor in [Flavor::Expected, Flavor::Realized] {
            prop_assert!(regret_primary(&trace, flavor).unwrap() >= 1.0);
            prop_assert!(regret_secondary(&trace, c, flavor).unwrap() >= 1.0);
        }
        for h in 0..stream.num_experts() {
            prop_assert!(sleeping_regret(&trace, ExpertId(h)).unwrap() >= 1.0);
        }
        prop_assert!(totals_consistent(&trace));
        prop_assert!(trace.totals().approx_eq(&trace.recompute_totals(), 1e-9));
    }

    #[test]
    fn switch_count_is_stable_and_direct(
        stream in stream_strategy(3, 50),
        selections in prop::collection::vec(0usize..3, 1..50),
    ) {
        let trace = arbitrary_trace(&stream, &selections, &[1.0]);
        let direct = trace.selections().windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert_eq!(count_switches(&trace), direct);
        prop_assert_eq!(count_switches(&trace), count_switches(&trace));
    }

    #[test]
    fn interval_bound_implies_segment_bound(
        k in 1usize..4,
        horizon in 10usize..400,
        alpha in 0.0..1.0f64,
        delta in 0.0..=1.0f64,
        c in 0.05..0.95f64,
        seed in any::<u64>(),
        selections in prop::collection::vec(0usize..4, 1..40),
    ) {
        let params = AssumptionParams::new(c, delta, alpha).unwrap();
        let stream = random_bounded_variance(horizon, k, &params, seed).unwrap();
        let checks = check_assumption2(&LossStream::from(stream.clone()), &params).unwrap();
        prop_assume!(checks.iter().all(|ch| ch.pass));
        let trace = arbitrary_trace(&stream, &selections, &[1.0]);
        prop_assert!(check_assumption2_prime(&trace, &params).unwrap().pass);
    }

    #[test]
    fn oracle_matches_brute_force(stream in binary_stream(3, 80), c in 0.0..1.0f64, delta in 0.0..=1.0f64, alpha in 0.0..=1.0f64) {
        let params = AssumptionParams::new(c, delta, alpha).unwrap();
        let horizon = stream.horizon();
        let thr = params.threshold(horizon);
        let Ok(timeline) = ActiveSetTimeline::compute(&stream, &params, &Reactivation::Never) else {
            return Ok(());
        };
        for h in 0..stream.num_experts() {
            let col = stream.secondary_column(ExpertId(h));
            let expected = brute_first_crossing(&col, c, thr).filter(|&t| t < horizon);
            prop_assert_eq!(timeline.deactivations(ExpertId(h)), expected.into_iter().collect::<Vec<_>>());
        }
        for t in 1..horizon {
            prop_assert!(timeline.active(t + 1).is_subset_of(timeline.active(t)));
        }
    }

    #[test]
    fn pseudo_losses_dominate(losses in prop::collection::vec(0.0..=1.0f64, 1..6), mask in prop::collection::vec(any::<bool>(), 6)) {
        let active = ActiveSet::from_flags(mask[..losses.len()].to_vec());
        let pseudo = pseudo_primary(&losses, &active);
        for (h, (l, p)) in losses.iter().zip(&pseudo).enumerate() {
            prop_assert!(l <= p);
            prop_assert_eq!(*p, if active.contains(ExpertId(h)) { *l } else { 1.0 });
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// The law of SD's selection, propagated exactly through its
    /// keep-or-redraw kernel, equals the normalized weights `(1 - eps)^L`.
    #[test]
    fn sd_marginal_law_by_enumeration(stream in binary_stream(3, 6)) {
        let (k, e) = (stream.num_experts(), stream.horizon());
        let eps = sd_epsilon(k, e);
        let trace = run_learner(LearnerKind::Sd, &LossStream::from(stream.clone()), 0).unwrap();
        let mut cum = vec![0.0; k];
        let mut law: Vec<f64> = vec![];
        let mut prev_w: Vec<f64> = vec![];
        for t in 1..=e {
            let w: Vec<f64> = cum.iter().map(|l| (1.0 - eps).powf(*l)).collect();
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / total).collect();
            law = if t == 1 {
                p.clone()
            } else {
                let keep: Vec<f64> = (0..k).map(|h| w[h] / prev_w[h]).collect();
                let redraw: f64 = (0..k).map(|h| law[h] * (1.0 - keep[h])).sum();
                (0..k).map(|h| law[h] * keep[h] + redraw * p[h]).collect()
            };
            for h in 0..k {
                prop_assert!((law[h] - p[h]).abs() <= 1e-9);
                prop_assert!((trace.round(t).distribution[h] - p[h]).abs() <= 1e-9);
            }
            prev_w = w;
            cum.iter_mut().zip(stream.primary(t)).for_each(|(c, l)| *c += l);
        }
    }

    #[test]
    fn runs_are_deterministic(stream in stream_strategy(3, 200), seed in any::<u64>(), alpha in 0.0..=1.0f64) {
        let s = LossStream::from(stream);
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let dump = |t: &RunTrace| { let mut buf = Vec::new(); write_trace(&mut buf, t).unwrap(); buf };
            prop_assert_eq!(dump(&run_learner(kind, &s, seed).unwrap()), dump(&run_learner(kind, &s, seed).unwrap()));
            prop_assert_eq!(dump(&asl_run(kind, &s, alpha, seed).unwrap()), dump(&asl_run(kind, &s, alpha, seed).unwrap()));
        }
    }

    #[test]
    fn alpha_zero_is_the_base_learner(stream in stream_strategy(3, 150), seed in any::<u64>()) {
        let s = LossStream::from(stream);
        for kind in [LearnerKind::Ew, LearnerKind::Sd, LearnerKind::Fll] {
            let a = asl_run(kind, &s, 0.0, seed).unwrap();
            let b = run_learner(kind, &s, seed).unwrap();
            prop_assert_eq!(a.selections(), b.selections());
            prop_assert!(a.totals().approx_eq(b.totals(), 1e-12));
        }
    }

    #[test]
    fn selections_are_constant_within_epochs(stream in stream_strategy(3, 300), seed in any::<u64>(), alpha in 0.0..=1.0f64) {
        let schedule = epoch_schedule(stream.horizon(), alpha).unwrap();
        let trace = asl_run(LearnerKind::Sd, &LossStream::from(stream), alpha, seed).unwrap();
        for (start, end) in schedule.epochs() {
            prop_assert!(trace.selections()[start - 1..end].iter().all(|&h| h == trace.selections()[start - 1]));
        }
    }

    #[test]
    fn meta_secondary_bound_per_trajectory(
        k in 2usize..4,
        horizon in 50usize..3000,
        alpha in 0.1..0.9f64,
        delta in 0.0..=1.0f64,
        c in 0.1..0.9f64,
        seed in any::<u64>(),
        fll in any::<bool>(),
    ) {
        let params = AssumptionParams::new(c, delta, alpha).unwrap();
        let stream = LossStream::from(random_bounded_variance(horizon, k, &params, seed).unwrap());
        let kind = if fll { LearnerKind::Fll } else { LearnerKind::Sd };
        let trace = asl_run(kind, &stream, alpha, seed ^ 1).unwrap();
        let excess: f64 = trace.rounds().map(|r| r.secondary[r.selection.0] - c).sum();
        prop_assert!(excess <= params.threshold(horizon) * (count_switches(&trace) + 1) as f64);
    }

    #[test]
    fn sleeping_runs_play_active_experts(
        stream in binary_stream(3, 120),
        alpha in 0.2..0.8f64,
        seed in any::<u64>(),
        every in 5usize..60,
    ) {
        let k = stream.num_experts();
        // keep the last expert's secondary at zero so someone always survives
        let mut p = Vec::new();
        let mut s = Vec::new();
        for t in 1..=stream.horizon() {
            p.extend_from_slice(stream.primary(t));
            let mut row = stream.secondary(t).to_vec();
            row[k - 1] = 0.0;
            s.extend_from_slice(&row);
        }
        let stream = LossStream::from(ObliviousStream::from_flat(k, p, s).unwrap());
        let params = AssumptionParams::new(0.3, 0.5, alpha).unwrap();
        let a1 = a1_run(&stream, &params, LearnerKind::Sd, seed).unwrap();
        for t in 1..=a1.len() {
            let r = a1.round(t);
            prop_assert!(r.is_active(r.selection));
            prop_assert!(r.distribution.iter().zip(r.active).all(|(p, a)| *a || *p == 0.0));
            if t > 1 {
                prop_assert!(r.active.iter().zip(a1.round(t - 1).active).all(|(n, c)| !n || *c));
            }
        }
        let options = A2Options { reactivation: Reactivation::Every(every), ..A2Options::default() };
        let run = a2_run(&stream, &params, &options, seed).unwrap();
        for epoch in &run.epochs {
            prop_assert!(epoch.active.contains(epoch.played));
            prop_assert!(epoch.keep_probability.is_none_or(|q| q <= 1.0 + 1e-12));
            prop_assert!(epoch.log_weight_sum_next <= epoch.log_weight_sum + run.eta.ln() + 1e-9);
        }
    }

    #[test]
    fn link_schedule_matches_brute_force(k in 2usize..5, horizon in 50usize..1500, alpha in 0.2..0.8f64, delta in 0.1..=1.0f64) {
        let Ok(stream) = build_link(horizon, k, alpha, 0.0, delta) else { return Ok(()); };
        let params = AssumptionParams::new(0.0, delta, alpha).unwrap();
        let thr = params.threshold(horizon);
        let timeline = ActiveSetTimeline::compute(&stream, &params, &Reactivation::Never).unwrap();
        for h in 0..k {
            let col = stream.secondary_column(ExpertId(h));
            let expected = brute_first_crossing(&col, 0.0, thr).filter(|&t| t < horizon);
            prop_assert_eq!(timeline.deactivations(ExpertId(h)), expected.into_iter().collect::<Vec<_>>());
            prop_assert!((1..=horizon).all(|t| stream.primary(t).iter().chain(stream.secondary(t)).all(|x| (0.0..=1.0).contains(x))));
        }
        prop_assert!(timeline.active(horizon).contains(ExpertId(k - 1)));
    }
}
