use prophet_core::bounds::{blind_t_bounds, iid_curve_bound, top1of2_iid_mthreshold_bound, EvalOptions};
use prophet_core::distributions::{Arrival, Distribution, Instance};
use prophet_core::params;
use prophet_core::rng::trial_rng;
use prophet_core::simulator::*;
use prophet_core::Error;
use proptest::prelude::{prop_assert, proptest, ProptestConfig};

fn arrivals(pairs: &[(f64, f64)]) -> Vec<Arrival> {
    pairs.iter().enumerate().map(|(i, &(time, value))| Arrival { index: i, value, time }).collect()
}

#[test]
fn hand_traces() {
    let a = arrivals(&[(0.1, 0.3), (0.5, 0.7)]);
    assert_eq!(run_strategy(&Strategy::SingleThreshold { tau: 0.5 }, &a), 0.7);
    assert_eq!(run_strategy(&Strategy::SingleThreshold { tau: 0.8 }, &a), 0.0);

    let a = arrivals(&[(0.1, 0.6), (0.2, 0.55), (0.3, 0.9)]);
    let out = Strategy::Top1ofkRaise { tau: 0.5, slots: 2 }.run(&a);
    assert_eq!((out.reward, out.accepted, out.first_position), (0.9, 2, Some(1)));

    let out = Strategy::Top1ofkFixed { taus: vec![0.5], slots: 2 }.run(&arrivals(&[(0.1, 0.6), (0.2, 0.7), (0.3, 0.9)]));
    assert_eq!((out.reward, out.accepted), (0.7, 2));

    // step curve: the bar for time t is taus[ceil(t m) - 1]
    let step = Strategy::StepThreshold { taus: vec![0.9, 0.2] };
    assert_eq!(run_strategy(&step, &arrivals(&[(0.3, 0.5), (0.6, 0.4)])), 0.4);

    let curve = Strategy::Top1of2Curve { taus: vec![0.5] };
    assert_eq!(run_strategy(&curve, &arrivals(&[(0.1, 0.6), (0.2, 0.55), (0.3, 0.8), (0.4, 0.95)])), 0.8);
}

#[test]
fn clock_trace() {
    let one = Strategy::SemionlineClock { taus: vec![vec![0.5, 0.5]] };
    let a = arrivals(&[(0.2, 0.6), (0.4, 0.9)]);
    let out = one.run(&a);
    assert_eq!((out.reward, out.accepted), (0.6, 1));

    // with a second function the clock still blocks the rest of the first block
    let two = Strategy::SemionlineClock { taus: vec![vec![0.5, 0.5], vec![0.8, 0.8]] };
    let out = two.run(&arrivals(&[(0.2, 0.6), (0.4, 0.9), (0.6, 0.85)]));
    assert_eq!((out.reward, out.accepted), (0.85, 2));
    let out = two.run(&a);
    assert_eq!((out.reward, out.accepted), (0.6, 1));

    // the reward is the last success even when an earlier one was larger
    let down = Strategy::SemionlineClock { taus: vec![vec![0.5, 0.5], vec![0.3, 0.3]] };
    assert_eq!(run_strategy(&down, &arrivals(&[(0.2, 0.9), (0.7, 0.4)])), 0.4);
    assert_eq!(run_strategy(&down, &[]), 0.0);
}

#[test]
fn strategy_validation() {
    assert!(Strategy::Top1ofkRaise { tau: 0.5, slots: 0 }.validate().is_err());
    assert!(Strategy::StepThreshold { taus: vec![] }.validate().is_err());
    assert!(Strategy::Top1ofkFixed { taus: vec![0.2, 0.5], slots: 2 }.validate().is_err());
    let inst = Instance::iid_uniform(10);
    assert!(StrategySpec::BlindQuantile { alphas: vec![0.2, 0.5] }.resolve(&inst).is_err());
    assert!(estimate_ratio(&inst, &Strategy::SingleThreshold { tau: 0.5 }, 0, 0).is_err());
}

#[test]
fn exact_dp_examples() {
    let det = |v| Distribution::Deterministic { value: v };
    assert_eq!(optimal_dp_discrete(&[det(1.0)], 1).unwrap(), 1.0);
    let two = [det(0.4), Distribution::TwoPoint { value: 1.0, p: 0.5 }];
    assert!((optimal_dp_discrete(&two, 1).unwrap() - 0.5).abs() < 1e-15);
    // with two slots take the sure value and still see the coin
    assert!((optimal_dp_discrete(&two, 2).unwrap() - 0.7).abs() < 1e-15);
    assert!(matches!(optimal_dp_discrete(&vec![det(1.0); 21], 1), Err(Error::Range(_))));
    assert!(matches!(optimal_dp_discrete(&[Distribution::uniform(0.0, 1.0).unwrap()], 1), Err(Error::Unsupported(_))));
}

/// Exhaustive search over all outcome vectors and all accept/skip policies
/// that only look at the past.
fn brute_force(vars: &[(f64, f64)], k: usize) -> f64 {
    fn go(vars: &[(f64, f64)], k: usize, i: usize, held: f64, used: usize) -> f64 {
        if i == vars.len() {
            return held;
        }
        let (b, p) = vars[i];
        let mut total = 0.0;
        for (v, pr) in [(b, p), (0.0, 1.0 - p)] {
            if pr == 0.0 {
                continue;
            }
            let skip = go(vars, k, i + 1, held, used);
            let take = if used < k { go(vars, k, i + 1, held.max(v), used + 1) } else { f64::NEG_INFINITY };
            total += pr * skip.max(take);
        }
        total
    }
    go(vars, k, 0, 0.0, 0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, rng_seed: proptest::test_runner::RngSeed::Fixed(5), ..ProptestConfig::default() })]

    #[test]
    fn dp_matches_brute_force(vars in proptest::collection::vec((0.01f64..5.0, 0.0f64..=1.0), 1..8), k in 1usize..4) {
        let dists: Vec<Distribution> = vars.iter().map(|&(value, p)| Distribution::TwoPoint { value, p }).collect();
        let got = optimal_dp_discrete(&dists, k).unwrap();
        let want = brute_force(&vars, k);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn estimates_are_deterministic() {
    let inst = Instance::iid_uniform(50);
    let s = Strategy::Top1ofkRaise { tau: 0.9, slots: 2 };
    let a = estimate_ratio(&inst, &s, 5000, 17).unwrap();
    let b = estimate_ratio(&inst, &s, 5000, 17).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = estimate_ratio(&inst, &s, 5000, 18).unwrap();
    assert_ne!(a.empirical_ratio, c.empirical_ratio);
    assert!(a.half_width >= 0.0 && a.trials == 5000 && a.seed == 17);
    assert!(a.extra.contains_key("accepted"));
}

#[test]
fn delta_method_interval_covers_known_ratio() {
    // one member: any threshold below the support accepts the value itself
    let inst = Instance::iid_uniform(1);
    let r = estimate_ratio(&inst, &Strategy::SingleThreshold { tau: 0.0 }, 2000, 1).unwrap();
    assert_eq!(r.empirical_ratio, 1.0);
    assert_eq!(r.half_width, 0.0);
    // threshold 1/2 on one uniform: E[ALG] = 3/8, E[Z] = 1/2
    let r = estimate_ratio(&inst, &Strategy::SingleThreshold { tau: 0.5 }, 200_000, 2).unwrap();
    assert!((r.empirical_ratio - 0.75).abs() < r.half_width, "{r:?}");
}

#[test]
fn record_counts() {
    for s in 0..100 {
        assert_eq!(record_count_trial(1, s), 1);
        assert_eq!(record_count_trial(0, s), 0);
    }
    let trials = 1_000_000u64;
    let counts: Vec<f64> = (0..trials).map(|t| record_count_with(3, &mut trial_rng(9, t)) as f64).collect();
    let mean = counts.iter().sum::<f64>() / trials as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let h3 = 1.0 + 0.5 + 1.0 / 3.0;
    assert!((mean - h3).abs() <= 3.0 * (var / trials as f64).sqrt(), "{mean}");
    // exact variance of the record count: sum of (1/i)(1 - 1/i)
    assert!((var - (0.25 + 2.0 / 9.0)).abs() < 0.01);
}

#[test]
fn record_tail_chernoff() {
    let f = record_tail_frequency(4, 2f64.exp(), 200_000, 4).unwrap();
    assert!(f.estimate <= 4f64.powf(-0.8) + 3.0 * f.std_error, "{f:?}");
    assert!(f.estimate > 0.0);
    assert!(record_tail_frequency(4, -1.0, 10, 0).is_err());
}

#[test]
fn dp_dominates_simulated_strategies() {
    let inst = params::hardness().instance(0.05).unwrap();
    let dp = optimal_dp_discrete(&inst, 2).unwrap();
    let strategies = [
        Strategy::SingleThreshold { tau: 0.0 },
        Strategy::SingleThreshold { tau: 0.11 },
        Strategy::Top1ofkRaise { tau: 0.0, slots: 2 },
        Strategy::Top1ofkRaise { tau: 0.06, slots: 2 },
        Strategy::Top1ofkFixed { taus: vec![0.12, 0.06], slots: 2 },
    ];
    let trials = 200_000u64;
    for s in &strategies {
        // fixed order, as the DP sees it
        let rewards: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = trial_rng(31, t);
                let a: Vec<Arrival> = inst
                    .iter()
                    .enumerate()
                    .map(|(i, d)| Arrival { index: i, value: d.sample(&mut rng), time: (i + 1) as f64 / 5.0 })
                    .collect();
                run_strategy(s, &a)
            })
            .collect();
        let mean = rewards.iter().sum::<f64>() / trials as f64;
        let sd = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
        assert!(mean <= dp + 3.0 * sd / (trials as f64).sqrt(), "{s:?}: {mean} vs {dp}");
    }
}

#[test]
fn blind_stopping_time_inside_brackets() {
    let members: Vec<Distribution> = (1..=8).map(|i| Distribution::uniform(0.0, i as f64).unwrap()).collect();
    let inst = Instance::new(members, false).unwrap();
    let alphas = [0.9, 0.85, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];
    let ks = [2, 4, 8];
    let freqs = blind_stop_frequency(&inst, &alphas, &ks, 100_000, 8).unwrap();
    for (k, f) in ks.iter().zip(freqs) {
        let b = blind_t_bounds(&alphas, *k, 8).unwrap();
        assert!(f.estimate >= b.stop_by_k - 3.0 * f.std_error, "k {k}: {f:?} vs {b:?}");
        assert!(f.estimate <= b.stop_by_k_upper() + 3.0 * f.std_error, "k {k}: {f:?} vs {b:?}");
    }
}

#[test]
fn loadmin_small_cases() {
    let one = Instance::iid_uniform(1);
    for s in 0..20 {
        let r = loadmin_run(&one, DEFAULT_LOADMIN_C, s).unwrap();
        assert_eq!(r.max_load, 1);
        assert!(r.success && r.value == r.true_max);
    }
    assert_eq!(discard_count(1), 0);
    assert_eq!(discard_count(2), 1);
    assert_eq!(discard_count(100), 10);
    assert_eq!(discard_count(101), 11);
    let lv = loadmin_levels(10_000, 2.0);
    assert!((lv[0] - 2.0 * 10_000f64.ln()).abs() < 1e-12);
    assert!(lv.windows(2).all(|w| w[1] < w[0]));
    let discrete = Instance::new(vec![Distribution::TwoPoint { value: 1.0, p: 0.5 }; 3], true).unwrap();
    assert!(matches!(loadmin_run(&discrete, 2.0, 0), Err(Error::Unsupported(_))));
}

#[test]
fn loadmin_success_and_load() {
    let n = 1000;
    let inst = Instance::iid_uniform(n);
    let runs = 200u64;
    let results: Vec<_> = (0..runs).map(|s| loadmin_run(&inst, DEFAULT_LOADMIN_C, s).unwrap()).collect();
    let hits = results.iter().filter(|r| r.success).count() as u64;
    let f = Frequency::from_hits(hits, runs);
    assert!(f.estimate >= 1.0 - 2.0 / (n as f64).sqrt() - 3.0 * f.std_error, "{f:?}");
    let mean_load = results.iter().map(|r| r.max_load as f64).sum::<f64>() / runs as f64;
    assert!(mean_load <= 15.0, "{mean_load}");
    for r in &results {
        assert!(r.value <= r.true_max);
        assert_eq!(r.success, r.value == r.true_max);
        assert!(r.max_load >= 1);
    }
    // heterogeneous members take the uncached path
    let mixed = Instance::new((1..=50).map(|i| Distribution::uniform(0.0, 1.0 + i as f64 / 50.0).unwrap()).collect(), false)
        .unwrap();
    let r = loadmin_run(&mixed, DEFAULT_LOADMIN_C, 3).unwrap();
    assert!(r.value <= r.true_max && r.max_load >= 1);
}

#[test]
fn poissonization_arguments_checked() {
    assert!(poissonization_tv(&Instance::iid_uniform(10), 2.0, 0, 0).is_err());
    let est = poissonization_tv(&Instance::iid_uniform(10), 0.5, 20_000, 0).unwrap();
    assert_eq!(est.histogram.iter().sum::<u64>(), 20_000);
    assert!((est.threshold - 0.95).abs() < 1e-10);
}

/// Finite-n slack on uniform instances of size 2000.
const SLACK: f64 = 0.01;

#[test]
fn certified_lemmas_hold_empirically() {
    let n = 2000;
    let inst = Instance::iid_uniform(n);
    let trials = 20_000;
    let grid = EvalOptions::default();
    let e = (-1f64).exp();
    let b = params::iid_curve();
    let e_sched = params::top1of2_curve();
    let cases: Vec<(&str, StrategySpec, f64)> = vec![
        ("samuel-cahn", StrategySpec::SamuelCahn, 0.5),
        ("quantile 1/e", StrategySpec::SingleThreshold { threshold: ThresholdSpec::Alpha(e) }, 1.0 - e),
        ("rate curve", StrategySpec::RateCurve { cs: b.steps().to_vec() }, iid_curve_bound(&b, &grid).unwrap().ratio),
        (
            "top-1-of-2 curve",
            StrategySpec::Top1of2Curve { cs: e_sched.steps().to_vec() },
            top1of2_iid_mthreshold_bound(&e_sched, &grid).unwrap().ratio,
        ),
        ("top-1-of-2 raise", StrategySpec::Top1ofkRaise { rate: None, slots: 2 }, 0.8520),
    ];
    for (name, spec, bound) in cases {
        let Resolved::Online(s) = spec.resolve(&inst).unwrap() else { unreachable!() };
        let r = estimate_ratio(&inst, &s, trials, 21).unwrap();
        assert!(r.empirical_ratio >= bound - 3.0 * r.half_width - SLACK, "{name}: {r:?} vs {bound}");
    }
}

#[test]
fn simulation_spec_round_trip() {
    let text = r#"{"instance":{"members":[{"kind":"uniform","lo":0.0,"hi":1.0}],"repeat":100},
                  "strategy":{"kind":"single_threshold","threshold":{"alpha":0.5}},"trials":1000,"seed":3}"#;
    let spec: SimulationSpec = serde_json::from_str(text).unwrap();
    let a = spec.run().unwrap();
    assert_eq!(a, spec.run().unwrap());
    let back: SimulationSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    let lm = r#"{"instance":{"members":[{"kind":"uniform","lo":0.0,"hi":1.0}],"repeat":200},
                 "strategy":{"kind":"load_min"},"trials":20,"seed":1}"#;
    let r = serde_json::from_str::<SimulationSpec>(lm).unwrap().run().unwrap();
    assert!(r.extra.contains_key("max_load"));
}
