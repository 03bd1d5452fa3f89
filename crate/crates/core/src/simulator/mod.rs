//! Monte-Carlo execution of the stopping rules, plus exact oracles for small
//! discrete instances.

mod dp;
mod estimate;
mod loadmin;
mod records;
mod strategy;

pub use dp::{optimal_dp_discrete, DP_MAX_VARS};
pub use estimate::{estimate_ratio, estimate_resolved, estimate_with, SimResult, TrialOutcome, Z99};
pub use loadmin::{
    discard_count, loadmin_levels, loadmin_run, LoadMinPlan, LoadMinResult, DEFAULT_LOADMIN_C, TOURNAMENT_CAP,
};
pub use records::{
    poissonization_tv, record_count_trial, record_count_with, record_tail_frequency, Frequency, TvEstimate,
};
pub use strategy::{run_strategy, Outcome, Resolved, Strategy, StrategySpec, ThresholdSpec};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{positional_arrivals_with, Instance};
use crate::error::{validation, Result};
use crate::rng::trial_rng;

/// Simulation request file: `{instance, strategy, trials, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub instance: Instance,
    pub strategy: StrategySpec,
    pub trials: u64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn run(&self) -> Result<SimResult> {
        let resolved = self.strategy.resolve(&self.instance)?;
        estimate_resolved(&self.instance, &resolved, self.trials, self.seed)
    }
}

/// Empirical `Pr[T <= k]` for the blind rule whose `j`-th processed member
/// faces the `alphas[j-1]` quantile of the maximum, in uniformly random order.
pub fn blind_stop_frequency(inst: &Instance, alphas: &[f64], ks: &[usize], trials: u64, seed: u64) -> Result<Vec<Frequency>> {
    if alphas.len() != inst.len() {
        return Err(validation(format!("expected {} step quantiles, got {}", inst.len(), alphas.len())));
    }
    if trials == 0 {
        return Err(validation("trials must be at least 1"));
    }
    let Resolved::Online(strategy) = (StrategySpec::BlindQuantile { alphas: alphas.to_vec() }).resolve(inst)? else {
        unreachable!("blind quantile resolves to an online rule")
    };
    let stops: Vec<Option<usize>> = (0..trials)
        .into_par_iter()
        .map(|t| strategy.run(&positional_arrivals_with(inst, &mut trial_rng(seed, t))).first_position)
        .collect();
    Ok(ks
        .iter()
        .map(|&k| Frequency::from_hits(stops.iter().filter(|s| s.is_some_and(|p| p <= k)).count() as u64, trials))
        .collect())
}
