//! Exact backward induction for Top-1-of-k on small discrete instances.

use crate::distributions::Distribution;
use crate::error::{Error, Result};

pub const DP_MAX_VARS: usize = 20;

fn outcomes(d: &Distribution) -> Result<Vec<(f64, f64)>> {
    match *d {
        Distribution::Deterministic { value } => Ok(vec![(value, 1.0)]),
        Distribution::TwoPoint { value, p } => Ok(vec![(value, p), (0.0, 1.0 - p)]),
        _ => Err(Error::Unsupported(format!("exact DP needs finite-support members, got {d:?}"))),
    }
}

/// Optimal expected maximum of up to `k` accepted values, observing `vars`
/// in the given order. The state after each step is the best value held
/// and the number of acceptances used.
pub fn optimal_dp_discrete(vars: &[Distribution], k: usize) -> Result<f64> {
    if vars.len() > DP_MAX_VARS {
        return Err(Error::Range(format!("exact DP supports at most {DP_MAX_VARS} variables, got {}", vars.len())));
    }
    let support: Vec<Vec<(f64, f64)>> = vars.iter().map(outcomes).collect::<Result<_>>()?;
    let mut held: Vec<f64> = std::iter::once(0.0).chain(support.iter().flatten().map(|o| o.0)).collect();
    held.sort_by(f64::total_cmp);
    held.dedup();
    let idx = |v: f64| held.binary_search_by(|h| h.total_cmp(&v)).expect("value in state space");

    // value[h][s]: best continuation holding held[h] with s acceptances used
    let mut value: Vec<Vec<f64>> = held.iter().map(|&h| vec![h; k + 1]).collect();
    for outs in support.iter().rev() {
        let next = value.clone();
        for (h, &hv) in held.iter().enumerate() {
            for s in 0..=k {
                value[h][s] = outs
                    .iter()
                    .map(|&(v, p)| {
                        let skip = next[h][s];
                        let take = if s < k { next[idx(hv.max(v))][s + 1] } else { f64::NEG_INFINITY };
                        p * skip.max(take)
                    })
                    .sum();
            }
        }
    }
    Ok(value[idx(0.0)][0])
}
