//! Right-to-left maxima counts and the Poisson count of exceedances.

use rand::Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::Z99;
use crate::distributions::{xi_threshold, Instance};
use crate::error::{validation, Result};
use crate::rng::trial_rng;
use crate::special_functions::poisson_pmf;

/// Suffix records among `points` iid uniform values.
pub fn record_count_with<R: Rng + ?Sized>(points: usize, rng: &mut R) -> usize {
    let vals: Vec<f64> = (0..points).map(|_| rng.gen::<f64>()).collect();
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    for v in vals.into_iter().rev() {
        if v > best {
            best = v;
            count += 1;
        }
    }
    count
}

pub fn record_count_trial(points: usize, seed: u64) -> usize {
    record_count_with(points, &mut trial_rng(seed, 0))
}

/// A Monte-Carlo frequency with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Frequency {
    pub fn from_hits(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self { estimate: p, std_error: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }
}

/// `Pr[M >= k]` where `M` counts suffix records among `Poisson(rate)` points.
pub fn record_tail_frequency(k: usize, rate: f64, trials: u64, seed: u64) -> Result<Frequency> {
    let pois = Poisson::new(rate).map_err(|e| validation(format!("poisson rate {rate}: {e}")))?;
    if trials == 0 {
        return Err(validation("trials must be at least 1"));
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let y = rng.sample(pois) as usize;
            u64::from(record_count_with(y, &mut rng) >= k)
        })
        .sum();
    Ok(Frequency::from_hits(hits, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub tv: f64,
    /// 99% half-width from the per-cell binomial errors, added up.
    pub half_width: f64,
    pub trials: u64,
    pub threshold: f64,
    pub histogram: Vec<u64>,
}

/// Total variation distance between the count of members at or above `Xi(q)`
/// and `Poisson(q)`.
pub fn poissonization_tv(inst: &Instance, q: f64, trials: u64, seed: u64) -> Result<TvEstimate> {
    if trials == 0 {
        return Err(validation("trials must be at least 1"));
    }
    let tau = xi_threshold(inst, q)?;
    let n = inst.len();
    let counts: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            inst.members().iter().filter(|d| d.sample(&mut rng) >= tau).count()
        })
        .collect();
    let mut histogram = vec![0u64; n + 1];
    for c in counts {
        histogram[c] += 1;
    }
    let tf = trials as f64;
    let mut tv = 0.0;
    let mut spread = 0.0;
    let mut pois_mass = 0.0;
    for (j, &h) in histogram.iter().enumerate() {
        let p = h as f64 / tf;
        let pj = poisson_pmf(q, j as u64)?;
        pois_mass += pj;
        tv += (p - pj).abs();
        spread += (p * (1.0 - p) / tf).sqrt();
    }
    // Poisson mass beyond n has no empirical counterpart
    tv += (1.0 - pois_mass).max(0.0);
    Ok(TvEstimate { tv: 0.5 * tv, half_width: 0.5 * Z99 * spread, trials, threshold: tau, histogram })
}
