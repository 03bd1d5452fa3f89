//! Derivative-free search over the parameters of each bound family.
//!
//! Search runs Nelder-Mead from several starts on the coarse-grid ratio, with
//! every trial point repaired into the box and ordering first. Whatever the
//! search finds is then certified on the full grid, and the input vector wins
//! unless something certifies strictly higher.

use std::fs::OpenOptions;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    certify, iid_curve_bound, secretary_blind_bound, top1of2_iid_mthreshold_bound, top1of2_three_threshold_bound,
    two_threshold_report, BoundReport, EvalOptions, QuantileSchedule, RateSchedule, SingleThresholdFamily,
};
use crate::error::{validation, Error, Result};
use crate::rng::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Interior quantiles of a blind schedule, descending.
    SecretaryBlind,
    /// Step-curve rates, ascending.
    IidCurve,
    /// Top-1-of-2 step-curve rates, ascending.
    Top1of2Mthreshold,
    /// `(c1, c2)`, descending.
    Top1of2TwoThreshold,
    /// `(c1, c2, c3)`, descending.
    Top1of2ThreeThreshold,
    /// A single secretary threshold rate.
    SingleThreshold,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::SecretaryBlind => "secretary_blind",
            Family::IidCurve => "iid_curve",
            Family::Top1of2Mthreshold => "top1of2_mthreshold",
            Family::Top1of2TwoThreshold => "top1of2_two_threshold",
            Family::Top1of2ThreeThreshold => "top1of2_three_threshold",
            Family::SingleThreshold => "single_threshold",
        }
    }

    pub fn ordering(&self) -> Ordering {
        match self {
            Family::SecretaryBlind | Family::Top1of2TwoThreshold | Family::Top1of2ThreeThreshold => Ordering::Descending,
            Family::IidCurve | Family::Top1of2Mthreshold => Ordering::Ascending,
            Family::SingleThreshold => Ordering::None,
        }
    }

    pub fn evaluate(&self, x: &[f64], opts: &EvalOptions) -> Result<BoundReport> {
        match self {
            Family::SecretaryBlind => secretary_blind_bound(&QuantileSchedule::from_interior(x)?, opts),
            Family::IidCurve => iid_curve_bound(&RateSchedule::ascending(x.to_vec())?, opts),
            Family::Top1of2Mthreshold => top1of2_iid_mthreshold_bound(&RateSchedule::ascending(x.to_vec())?, opts),
            Family::Top1of2TwoThreshold => {
                let [c1, c2] = fixed::<2>(x)?;
                two_threshold_report(c1, c2, opts)
            }
            Family::Top1of2ThreeThreshold => {
                let [c1, c2, c3] = fixed::<3>(x)?;
                Ok(top1of2_three_threshold_bound(c1, c2, c3, opts)?.report)
            }
            Family::SingleThreshold => {
                let [q] = fixed::<1>(x)?;
                if !(q > 0.0 && q.is_finite()) {
                    return Err(validation(format!("rate must be positive, got {q}")));
                }
                Ok(certify(&SingleThresholdFamily { q }, opts.target, &opts.grid))
            }
        }
    }

    /// Coarse-grid ratio; infeasible points score negative infinity.
    fn search_objective(&self, x: &[f64]) -> f64 {
        match self.evaluate(x, &EvalOptions::coarse()) {
            Ok(r) if !r.ratio.is_nan() => r.ratio,
            _ => f64::NEG_INFINITY,
        }
    }
}

fn fixed<const N: usize>(x: &[f64]) -> Result<[f64; N]> {
    x.try_into().map_err(|_| validation(format!("expected {N} parameters, got {}", x.len())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    #[default]
    None,
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub family: Family,
    pub dimension: usize,
    /// `[lo, hi]` per coordinate.
    pub bounds: Vec<[f64; 2]>,
    /// Defaults to the family's natural ordering.
    #[serde(default)]
    pub ordering: Option<Ordering>,
    pub restarts: usize,
    /// Objective evaluations across all restarts. Zero certifies the input only.
    pub budget: usize,
    pub seed: u64,
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.bounds.len() != self.dimension {
            return Err(validation(format!("need {} coordinate bounds, got {}", self.dimension, self.bounds.len())));
        }
        if let Some(b) = self.bounds.iter().find(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(validation(format!("bounds must be finite with lo <= hi, got {b:?}")));
        }
        if self.budget != 0 && self.budget < 10 * self.dimension {
            return Err(validation(format!(
                "budget must be zero or at least {} evaluations, got {}",
                10 * self.dimension,
                self.budget
            )));
        }
        if self.restarts == 0 {
            return Err(validation("restarts must be at least 1"));
        }
        Ok(())
    }

    fn ordering(&self) -> Ordering {
        self.ordering.unwrap_or_else(|| self.family.ordering())
    }

    /// Clamp into the box, then sort into the required order.
    pub fn repair(&self, x: &mut [f64]) {
        for (v, [lo, hi]) in x.iter_mut().zip(&self.bounds) {
            *v = if v.is_nan() { 0.5 * (lo + hi) } else { v.clamp(*lo, *hi) };
        }
        match self.ordering() {
            Ordering::None => {}
            Ordering::Ascending => x.sort_by(f64::total_cmp),
            Ordering::Descending => x.sort_by(|a, b| b.total_cmp(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub family: Family,
    pub params: Vec<f64>,
    pub report: BoundReport,
    /// Certified ratio of the (repaired) input.
    pub input_ratio: f64,
    pub improved: bool,
    pub evaluations: usize,
    pub seed: u64,
    pub budget: usize,
}

/// Nelder-Mead maximization of `f` with `repair` applied to every point.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    repair: &dyn Fn(&mut [f64]),
    start: &[f64],
    steps: &[f64],
    budget: usize,
) -> (Vec<f64>, f64, usize) {
    let d = start.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &mut Vec<f64>| {
        repair(x);
        evals.set(evals.get() + 1);
        // minimize the negated score
        -f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let mut x0 = start.to_vec();
    let f0 = eval(&mut x0);
    simplex.push((x0, f0));
    for i in 0..d {
        let mut x = simplex[0].0.clone();
        x[i] += steps[i];
        let fx = eval(&mut x);
        simplex.push((x, fx));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    while evals.get() + d + 2 <= budget {
        order(&mut simplex);
        let worst = simplex[d].clone();
        let centroid: Vec<f64> =
            (0..d).map(|j| simplex[..d].iter().map(|p| p.0[j]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };
        let mut xr = along(1.0);
        let fr = eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(2.0);
            let fe = eval(&mut xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let mut xc = if fr < worst.1 { along(0.5) } else { along(-0.5) };
            let fc = eval(&mut xc);
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fx = eval(&mut x);
                    *p = (x, fx);
                }
            }
        }
        let spread = simplex.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) - simplex[0].1;
        if spread.abs() < 1e-13 && simplex.iter().all(|p| p.1.is_finite()) {
            let diam = simplex.iter().map(|p| dist(&p.0, &simplex[0].0)).fold(0.0, f64::max);
            if diam < 1e-10 {
                break;
            }
        }
    }
    order(&mut simplex);
    let (x, fx) = simplex.swap_remove(0);
    (x, -fx, evals.get())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Multistart search. Restart 0 begins at the input; the others begin at
/// random points of the box drawn from the generator of `(seed, restart)`.
pub fn optimize(spec: &SearchSpec, initial: &[f64]) -> Result<OptimizeResult> {
    spec.validate()?;
    if initial.len() != spec.dimension {
        return Err(validation(format!("expected {} initial parameters, got {}", spec.dimension, initial.len())));
    }
    let mut start = initial.to_vec();
    spec.repair(&mut start);
    let full = EvalOptions::default();
    let base = spec
        .family
        .evaluate(&start, &full)
        .map_err(|e| Error::Constraint(format!("no feasible start: {e}")))?;

    let mut best = (start.clone(), base.clone());
    let mut evaluations = 0;
    if spec.budget > 0 {
        let per = spec.budget / spec.restarts;
        let steps: Vec<f64> = spec.bounds.iter().map(|[lo, hi]| 0.05 * (hi - lo)).collect();
        let objective = |x: &[f64]| spec.family.search_objective(x);
        let repair = |x: &mut [f64]| spec.repair(x);
        let runs: Vec<(Vec<f64>, usize)> = (0..spec.restarts)
            .into_par_iter()
            .map(|r| {
                let x0 = if r == 0 {
                    start.clone()
                } else {
                    let mut rng = trial_rng(spec.seed, r as u64);
                    spec.bounds.iter().map(|[lo, hi]| lo + (hi - lo) * rng.gen::<f64>()).collect()
                };
                let (x, _, used) = nelder_mead(&objective, &repair, &x0, &steps, per);
                (x, used)
            })
            .collect();
        let certified: Vec<Option<BoundReport>> =
            runs.par_iter().map(|(x, _)| spec.family.evaluate(x, &full).ok()).collect();
        for ((x, used), report) in runs.into_iter().zip(certified) {
            evaluations += used;
            if let Some(report) = report {
                if report.ratio > best.1.ratio {
                    best = (x, report);
                }
            }
        }
    }
    let improved = best.1.ratio > base.ratio;
    Ok(OptimizeResult {
        family: spec.family,
        params: best.0,
        report: best.1,
        input_ratio: base.ratio,
        improved,
        evaluations,
        seed: spec.seed,
        budget: spec.budget,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub family: Family,
    pub base_ratio: f64,
    pub best_sampled: f64,
    pub improvement: f64,
    pub local_max_candidate: bool,
    pub radius: f64,
    pub samples: usize,
    pub feasible_samples: usize,
    pub seed: u64,
}

/// Improvements at or below this size do not count against a local maximum.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

/// Evaluates the coarse-grid ratio at random perturbations within `radius`
/// (per coordinate, sorted into the family's ordering) and reports whether
/// any beats the input by more than `AUDIT_TOLERANCE`.
pub fn perturbation_audit(family: Family, x: &[f64], radius: f64, samples: usize, seed: u64) -> Result<AuditReport> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(validation(format!("radius must be non-negative, got {radius}")));
    }
    let coarse = EvalOptions::coarse();
    let base = family
        .evaluate(x, &coarse)
        .map_err(|e| Error::Constraint(format!("vector outside the feasible region: {e}")))?
        .ratio;
    let samples_run = if radius == 0.0 { 0 } else { samples };
    let scores: Vec<Option<f64>> = (0..samples_run as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = trial_rng(seed, s);
            let mut y: Vec<f64> = x.iter().map(|v| v + radius * (2.0 * rng.gen::<f64>() - 1.0)).collect();
            match family.ordering() {
                Ordering::None => {}
                Ordering::Ascending => y.sort_by(f64::total_cmp),
                Ordering::Descending => y.sort_by(|a, b| b.total_cmp(a)),
            }
            family.evaluate(&y, &coarse).ok().map(|r| r.ratio).filter(|r| !r.is_nan())
        })
        .collect();
    let feasible: Vec<f64> = scores.into_iter().flatten().collect();
    let best_sampled = feasible.iter().copied().fold(base, f64::max);
    let improvement = best_sampled - base;
    Ok(AuditReport {
        family,
        base_ratio: base,
        best_sampled,
        improvement,
        local_max_candidate: improvement <= AUDIT_TOLERANCE,
        radius,
        samples,
        feasible_samples: feasible.len(),
        seed,
    })
}

/// Appends `(family, params, ratio, seed, budget)` to a CSV file, writing the
/// header when the file is new or empty.
pub fn append_ledger(path: &Path, result: &OptimizeResult) -> Result<()> {
    let io = |e: std::io::Error| validation(format!("ledger {}: {e}", path.display()));
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| validation(format!("ledger {}: {e}", path.display()));
    if fresh {
        w.write_record(["family", "params", "ratio", "seed", "budget"]).map_err(csv_err)?;
    }
    let params: Vec<String> = result.params.iter().map(|v| format!("{v:?}")).collect();
    w.write_record([
        result.family.name().to_string(),
        params.join(" "),
        format!("{:?}", result.report.ratio),
        result.seed.to_string(),
        result.budget.to_string(),
    ])
    .map_err(csv_err)?;
    w.flush().map_err(io)
}
