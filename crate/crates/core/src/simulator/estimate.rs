//! Ratio-of-means estimation over independent seeded trials.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loadmin::loadmin_trial;
use super::strategy::{Resolved, Strategy};
use crate::distributions::{simulated_arrivals_with, Instance};
use crate::error::{validation, Result};
use crate::rng::{trial_rng, TrialRng};
use crate::special_functions::NeumaierSum;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub empirical_ratio: f64,
    /// 99% confidence half-width of `empirical_ratio`.
    pub half_width: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub mean_alg: f64,
    pub mean_prophet: f64,
    /// Per-trial metric means, such as acceptance counts or maximum load.
    pub extra: BTreeMap<String, f64>,
}

/// One trial's algorithm reward, prophet value and named metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub alg: f64,
    pub prophet: f64,
    pub metrics: Vec<f64>,
}

/// Runs `trial` for indices `0..trials`, each with the generator of
/// `(seed, index)`, and reduces in index order so the result does not depend
/// on scheduling.
pub fn estimate_with<F>(trials: u64, seed: u64, names: &[&str], trial: F) -> Result<SimResult>
where
    F: Fn(&mut TrialRng) -> TrialOutcome + Sync,
{
    if trials == 0 {
        return Err(validation("trials must be at least 1"));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut trial_rng(seed, t)))
        .collect();
    Ok(summarize(&outcomes, seed, names))
}

fn summarize(outcomes: &[TrialOutcome], seed: u64, names: &[&str]) -> SimResult {
    let n = outcomes.len() as f64;
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| {
        let mut s = NeumaierSum::new();
        s.extend(outcomes.iter().map(f));
        s.value() / n
    };
    let mean_alg = mean(&|o| o.alg);
    let mean_prophet = mean(&|o| o.prophet);
    let ratio = mean_alg / mean_prophet;
    // delta method: residuals a - R b have mean zero at the estimate
    let std_error = if outcomes.len() > 1 {
        let mut s = NeumaierSum::new();
        s.extend(outcomes.iter().map(|o| (o.alg - ratio * o.prophet).powi(2)));
        (s.value() / (n - 1.0) / n).sqrt() / mean_prophet
    } else {
        0.0
    };
    let extra = names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), mean(&|o| o.metrics[i])))
        .collect();
    SimResult {
        empirical_ratio: ratio,
        half_width: Z99 * std_error,
        std_error,
        trials: outcomes.len() as u64,
        seed,
        mean_alg,
        mean_prophet,
        extra,
    }
}

fn online_trial(inst: &Instance, strategy: &Strategy, rng: &mut TrialRng) -> TrialOutcome {
    let arrivals = simulated_arrivals_with(inst, rng);
    let prophet = arrivals.iter().map(|a| a.value).fold(0.0, f64::max);
    let out = strategy.run(&arrivals);
    TrialOutcome {
        alg: out.reward,
        prophet,
        metrics: vec![out.accepted as f64, if out.accepted > 0 { 1.0 } else { 0.0 }],
    }
}

/// Empirical `E[ALG] / E[Z]` of an online strategy under uniformly random
/// arrival times.
pub fn estimate_ratio(inst: &Instance, strategy: &Strategy, trials: u64, seed: u64) -> Result<SimResult> {
    strategy.validate()?;
    estimate_with(trials, seed, &["accepted", "any_accepted"], |rng| online_trial(inst, strategy, rng))
}

pub fn estimate_resolved(inst: &Instance, strategy: &Resolved, trials: u64, seed: u64) -> Result<SimResult> {
    match strategy {
        Resolved::Online(s) => estimate_ratio(inst, s, trials, seed),
        Resolved::LoadMin { c } => {
            let plan = super::loadmin::LoadMinPlan::new(inst, *c)?;
            estimate_with(trials, seed, &["success", "max_load", "queries"], |rng| {
                let r = loadmin_trial(inst, &plan, rng);
                TrialOutcome {
                    alg: r.value,
                    prophet: r.true_max,
                    metrics: vec![if r.success { 1.0 } else { 0.0 }, r.max_load as f64, r.queries as f64],
                }
            })
        }
    }
}
