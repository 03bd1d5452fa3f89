//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a
//! criterion fails that is not listed in `KNOWN_GAPS`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prophet_core::bounds::*;
use prophet_core::distributions::{xi_threshold, Distribution, Instance};
use prophet_core::hardness::{hardness_expected_values, hardness_limit_ratios};
use prophet_core::params;
use prophet_core::semionline::*;
use prophet_core::simulator::*;
use prophet_core::special_functions::{compensated_sum, lambert_w, one_minus_exp_over, stable_qtk, TruncationPolicy};

const SECRETARY_TARGET: f64 = 0.6724;
const SECRETARY_SECONDS: u64 = 60;
const SEMIONLINE_TARGET: f64 = 0.8901 - 1e-6;
const SEMIONLINE_SECONDS: u64 = 600;
const MTHRESHOLD_TARGET: f64 = 0.883;
const CURVE_TARGET: f64 = 0.7406;
const TWO_TARGET: f64 = 0.776245;
const TWO_TOL: f64 = 1e-6;
const THREE_TARGET: f64 = 0.781;
const THREE_TOL: f64 = 1e-4;
const ZETA_QUOTED: [(usize, f64); 3] = [(2, 0.8520), (3, 0.9463), (4, 0.9816)];
const ZETA_TOL: f64 = 5e-4;
const ZETA_RESIDUAL: f64 = 1e-10;
const HARDNESS_UPPER: f64 = 0.79424;
const HARDNESS_DP_TOL: f64 = 1e-9;
const HARDNESS_LIMIT_TOL: f64 = 1e-3;
const LAMBERT_TOL: f64 = 1e-10;
const SEMIONLINE_MC_FLOOR: f64 = 0.885;
const TV_BOUND: f64 = 0.08;
const LOADMIN_MAX_LOAD: f64 = 15.0;
const LOADMIN_RATIO: f64 = 0.99;
const DERIVATIVE_REL: f64 = 1e-6;

/// Criteria that fail for a documented reason and do not fail the run.
const KNOWN_GAPS: [(usize, &str); 1] = [(
    6,
    "k = 4 solves to ratio 0.98245, above the quoted 0.9816 but 8.4e-4 from it; \
     the one-sided claim holds, the two-sided tolerance does not",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_secretary() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let r = pool.install(|| secretary_blind_bound(&params::secretary_blind(), &EvalOptions::with_target(SECRETARY_TARGET)));
    let took = start.elapsed();
    let r = r.unwrap();
    let pass = r.certified && r.defect_min >= 0.0 && r.ratio >= SECRETARY_TARGET && took <= Duration::from_secs(SECRETARY_SECONDS);
    outcome(pass, format!("ratio {:.7}, defect_min {:.3e}, single thread {:.1?}", r.ratio, r.defect_min, took))
}

fn c2_semionline() -> Outcome {
    let start = Instant::now();
    let r = semionline_verify(&params::semionline(), SEMIONLINE_TARGET, DEFAULT_EPS, VerifyOptions::default()).unwrap();
    let took = start.elapsed();
    let pass = r.certified && r.defect_min >= 0.0 && took <= Duration::from_secs(SEMIONLINE_SECONDS);
    outcome(pass, format!("target {SEMIONLINE_TARGET}, defect_min {:.3e}, ratio {:.7}, {:.1?}", r.defect_min, r.ratio, took))
}

fn c3_mthreshold() -> Outcome {
    let r = top1of2_iid_mthreshold_bound(&params::top1of2_curve(), &EvalOptions::with_target(MTHRESHOLD_TARGET)).unwrap();
    outcome(r.certified && r.ratio >= MTHRESHOLD_TARGET, format!("ratio {:.7}, defect_min {:.3e}", r.ratio, r.defect_min))
}

fn c4_curve() -> Outcome {
    let r = iid_curve_bound(&params::iid_curve(), &EvalOptions::with_target(CURVE_TARGET)).unwrap();
    outcome(r.certified && r.ratio >= CURVE_TARGET, format!("ratio {:.7}, defect_min {:.3e}", r.ratio, r.defect_min))
}

fn c5_thresholds() -> Outcome {
    let (a1, a2) = params::two_threshold();
    let two = top1of2_two_threshold_bound(a1, a2).unwrap();
    let (b1, b2, b3) = params::three_threshold();
    let three = top1of2_three_threshold_bound(b1, b2, b3, &EvalOptions::with_target(THREE_TARGET - THREE_TOL)).unwrap();
    let pass = two.ratio >= TWO_TARGET - TWO_TOL && three.ratio >= THREE_TARGET - THREE_TOL && three.report.certified;
    outcome(pass, format!("two {:.10}, three {:.10} (grid certified {})", two.ratio, three.ratio, three.report.certified))
}

fn c6_zeta() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, quoted) in ZETA_QUOTED {
        let z = zeta_k_solve(k, &TruncationPolicy::zeta_default()).unwrap();
        let ok = z.ratio >= quoted && (z.ratio - quoted).abs() <= ZETA_TOL && z.residual.abs() <= ZETA_RESIDUAL;
        pass &= ok;
        parts.push(format!("k={k} zeta {:.6} ratio {:.6} resid {:.1e}{}", z.zeta, z.ratio, z.residual, if ok { "" } else { " (off)" }));
    }
    outcome(pass, parts.join("; "))
}

fn c7_hardness() -> Outcome {
    let hp = params::hardness();
    let alphas = hardness_limit_ratios(&hp).unwrap();
    let best_alpha = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v = hardness_expected_values(&hp, 1e-4).unwrap();
    let dp = optimal_dp_discrete(&hp.instance(1e-4).unwrap(), 2).unwrap();
    let dp_gap = (v.best() - dp).abs();
    let all_below = v.algorithms.iter().all(|a| *a <= dp + HARDNESS_DP_TOL);
    let finite = v.best() / v.prophet;
    let pass = best_alpha < HARDNESS_UPPER && dp_gap <= HARDNESS_DP_TOL && all_below && (finite - best_alpha).abs() <= HARDNESS_LIMIT_TOL;
    outcome(pass, format!("max alpha {best_alpha:.8}, |best - DP| {dp_gap:.1e}, finite-beta ratio {finite:.8}"))
}

fn c8_lambert() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=30u32 {
        let b = top1ofk_lambertw_bound(k).unwrap();
        // recompute the identity here rather than trusting the stored residual
        let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
        let c = k as f64 * lambert_w((ln_fact / k as f64).exp() / k as f64).unwrap();
        let resid = ((-c).exp() - (k as f64 * c.ln() - ln_fact).exp()).abs();
        worst = worst.max(resid).max(b.identity_residual).max((b.c - c).abs());
    }
    outcome(worst < LAMBERT_TOL, format!("worst residual over k = 1..30: {worst:.2e}"))
}

fn c9_monte_carlo() -> Outcome {
    let inst = Instance::iid_uniform(2000);
    let run = |spec: StrategySpec, inst: &Instance, trials: u64, seed: u64| {
        let Resolved::Online(s) = spec.resolve(inst).unwrap() else { unreachable!() };
        estimate_ratio(inst, &s, trials, seed).unwrap()
    };
    let sc = run(StrategySpec::SamuelCahn, &inst, 100_000, 0);
    let e = (-1f64).exp();
    let q = run(StrategySpec::SingleThreshold { threshold: ThresholdSpec::Alpha(e) }, &inst, 100_000, 0);
    let spec = serde_json::from_str::<RateMatrixSpec>(params::SEMIONLINE).unwrap();
    let big = Instance::iid_uniform(4000);
    let so = run(StrategySpec::SemionlineClock { matrix: spec }, &big, 10_000, 0);
    let pass = sc.empirical_ratio >= 0.5
        && q.empirical_ratio >= (1.0 - e) - 3.0 * q.std_error
        && so.empirical_ratio >= SEMIONLINE_MC_FLOOR;
    outcome(
        pass,
        format!(
            "samuel-cahn {:.6}, 1/e quantile {:.6} (se {:.1e}), semi-online n=4000 {:.6}",
            sc.empirical_ratio, q.empirical_ratio, q.std_error, so.empirical_ratio
        ),
    )
}

fn c10_blind_t() -> Outcome {
    let members: Vec<Distribution> = (1..=8).map(|i| Distribution::uniform(0.0, i as f64).unwrap()).collect();
    let inst = Instance::new(members, false).unwrap();
    let alphas = [0.9, 0.85, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];
    let ks = [2, 4, 8];
    let freqs = blind_stop_frequency(&inst, &alphas, &ks, 1_000_000, 0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, f) in ks.iter().zip(freqs) {
        let b = blind_t_bounds(&alphas, *k, 8).unwrap();
        let ok = f.estimate >= b.stop_by_k - 3.0 * f.std_error && f.estimate <= b.stop_by_k_upper() + 3.0 * f.std_error;
        pass &= ok;
        parts.push(format!("k={k}: {:.5} in [{:.5}, {:.5}]", f.estimate, b.stop_by_k, b.stop_by_k_upper()));
    }
    outcome(pass, parts.join("; "))
}

fn c11_poissonization() -> Outcome {
    let est = poissonization_tv(&Instance::iid_uniform(100), 2.0, 1_000_000, 0).unwrap();
    outcome(est.tv <= TV_BOUND + 3.0 * est.half_width, format!("tv {:.5}, half-width {:.5}", est.tv, est.half_width))
}

fn c12_loadmin() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let inst = Instance::iid_uniform(n);
        let r = estimate_resolved(&inst, &Resolved::LoadMin { c: DEFAULT_LOADMIN_C }, 200, 0).unwrap();
        let f = Frequency::from_hits((r.extra["success"] * 200.0).round() as u64, 200);
        let load = r.extra["max_load"];
        let mut ok = f.estimate >= 1.0 - 2.0 / (n as f64).sqrt() - 3.0 * f.std_error && load <= LOADMIN_MAX_LOAD;
        if n == 10_000 {
            ok &= r.empirical_ratio >= LOADMIN_RATIO;
        }
        pass &= ok;
        parts.push(format!("n={n}: success {:.3}, load {load:.2}, ratio {:.5}", f.estimate, r.empirical_ratio));
    }
    outcome(pass, parts.join("; "))
}

/// A sample of the invariants under a fixed seed matrix, plus the
/// derivative tables against finite differences. The full property suites
/// run under `cargo test`.
fn c13_properties() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    let mut worst_rel: f64 = 0.0;
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let x = rng.gen_range(-0.3678..50.0);
        let w = lambert_w(x).unwrap();
        check((w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0), format!("lambert identity at {x}"));

        let y = rng.gen_range(1e-6..30.0);
        let t = rng.gen_range(1..40);
        let a = stable_qtk(y, &TruncationPolicy::terms(t)).unwrap();
        let b = stable_qtk(y, &TruncationPolicy::terms(t + 1)).unwrap();
        check(a <= one_minus_exp_over(y) * (1.0 + 1e-15) && b >= a, format!("truncated series at {y}"));

        let ints: Vec<i64> = (0..50).map(|_| rng.gen_range(-1_000_000..1_000_000)).collect();
        check(
            compensated_sum(ints.iter().map(|&i| i as f64 * 0.25)) == ints.iter().sum::<i64>() as f64 * 0.25,
            "compensated sum".into(),
        );

        let scales: Vec<f64> = (0..6).map(|_| rng.gen_range(0.2..5.0)).collect();
        let inst = Instance::new(scales.iter().map(|&s| Distribution::ScaledUniform { scale: s }).collect(), false).unwrap();
        let q = rng.gen_range(0.1..5.0);
        let tau = xi_threshold(&inst, q).unwrap();
        check((inst.survival_sum(tau) - q).abs() <= 1e-10, format!("summation threshold at q {q}"));

        let vars: Vec<Distribution> =
            (0..6).map(|_| Distribution::TwoPoint { value: rng.gen_range(0.1..3.0), p: rng.gen_range(0.0..1.0) }).collect();
        let dp = optimal_dp_discrete(&vars, 2).unwrap();
        let trials = 20_000u64;
        let rewards: Vec<f64> = (0..trials)
            .map(|t| {
                let mut r = prophet_core::rng::trial_rng(seed, t);
                // greedy: take anything that improves on the held value
                let mut best: f64 = 0.0;
                let mut used = 0;
                for d in &vars {
                    let v = d.sample(&mut r);
                    if v > best && used < 2 {
                        best = v;
                        used += 1;
                    }
                }
                best
            })
            .collect();
        let mean = rewards.iter().sum::<f64>() / trials as f64;
        let sd = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
        check(mean <= dp + 3.0 * sd / (trials as f64).sqrt(), format!("dp dominance at seed {seed}: {mean} vs {dp}"));

        let flat: Vec<f64> = {
            let mut v = Vec::new();
            for _ in 0..3 {
                let mut row: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..3.0)).collect();
                row.sort_by(f64::total_cmp);
                v.extend(row);
            }
            v
        };
        let mat = build_rate_matrix(&flat, 3, 3, 9, Layout::Forward).unwrap();
        let l = rng.gen_range(0.01..3.5);
        let table = semionline_dp(&mat, l);
        let mut dominated = true;
        for j in 1..=4 {
            for i in 0..=9 {
                dominated &= table.prob(true, j, i) >= table.prob(false, j, i) - 1e-15;
            }
        }
        check(dominated, format!("secured dominance at seed {seed}"));
        let l2 = rng.gen_range(0.01..3.5);
        let (lo, hi) = if l <= l2 { (l, l2) } else { (l2, l) };
        check(semionline_dp(&mat, lo).answer() <= semionline_dp(&mat, hi).answer() + 1e-15, "monotone in level".into());

        for m in [mat.clone(), params::semionline()] {
            let h = 1e-5;
            let l = rng.gen_range(0.02..3.0);
            if m.distinct_rates().iter().any(|r| (r - l).abs() < 10.0 * h) {
                continue;
            }
            let opts = DpOptions { derivatives: true, side: Side::Left };
            let t = semionline_dp_with(&m, l, opts);
            let f = |x: f64| semionline_dp(&m, x).answer();
            let g = |x: f64| semionline_dp_with(&m, x, opts).d1(false, 1, 0).unwrap();
            let pairs = [
                (t.d1(false, 1, 0).unwrap(), (f(l + h) - f(l - h)) / (2.0 * h)),
                (t.d2(false, 1, 0).unwrap(), (g(l + h) - g(l - h)) / (2.0 * h)),
            ];
            for (exact, fd) in pairs {
                let rel = (exact - fd).abs() / exact.abs().max(1e-3);
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    check(worst_rel <= DERIVATIVE_REL, format!("derivative tables off by {worst_rel:.2e}"));
    let pass = failures.is_empty();
    let detail = if pass {
        format!("8 seeds, derivative tables within {worst_rel:.1e} relative")
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 13] = [
        (1, "prophet secretary, blind quantiles", c1_secretary),
        (2, "semi-online clock matrix", c2_semionline),
        (3, "iid top-1-of-2 step curve", c3_mthreshold),
        (4, "iid step curve", c4_curve),
        (5, "top-1-of-2 two and three thresholds", c5_thresholds),
        (6, "top-1-of-k fixed points", c6_zeta),
        (7, "top-1-of-2 hardness instance", c7_hardness),
        (8, "lambert-w identity", c8_lambert),
        (9, "monte-carlo brackets", c9_monte_carlo),
        (10, "blind stopping-time brackets", c10_blind_t),
        (11, "poissonization distance", c11_poissonization),
        (12, "load minimization", c12_loadmin),
        (13, "property suites", c13_properties),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let gap = KNOWN_GAPS.iter().find(|(g, _)| *g == id);
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {} [{:.1?}]", out.detail, took);
        match (out.pass, gap) {
            (false, Some((_, why))) => println!("             known gap: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("             listed as a known gap but passed"),
            (true, None) => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criterion(s) failed");
        std::process::exit(1);
    }
}
