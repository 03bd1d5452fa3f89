//! Prophet-secretary bounds: the single-threshold warm-up, the blind
//! quantile-schedule bound, and the closed-form brackets on the stopping step
//! of a blind strategy.

use serde::{Deserialize, Serialize};

use super::{certify, BoundReport, EvalOptions, GridOptions, QuantileSchedule, Segment, SegmentFamily};
use crate::error::{domain, validation, Result};
use crate::special_functions::{one_minus_exp_over, stable_qtk, NeumaierSum, TruncationPolicy};

/// Single threshold at rate `q`: the branch `1 - e^-q` and, for levels with
/// rate `l' in (0, q]`, the chance that the top realization above the level
/// arrives before everything between threshold and level.
#[derive(Debug, Clone, Copy)]
pub struct SingleThresholdFamily {
    pub q: f64,
}

impl SegmentFamily for SingleThresholdFamily {
    fn branches(&self) -> Vec<(usize, f64)> {
        vec![(0, -(-self.q).exp_m1())]
    }

    fn segments(&self) -> Vec<Segment> {
        vec![Segment { label: 1, lo: 0.0, hi: self.q }]
    }

    fn numerator(&self, _label: usize, l: f64) -> f64 {
        one_minus_exp_over((self.q - l).max(0.0))
    }

    fn weight(&self, _label: usize, _x: f64) -> f64 {
        1.0
    }
}

pub fn single_threshold_secretary_bound(q: f64, grid: &GridOptions) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(domain(format!("rate must be positive, got {q}")));
    }
    Ok(certify(&SingleThresholdFamily { q }, None, grid).ratio)
}

/// Blind strategy following a maximum-quantile schedule. Segment `j` covers
/// the level quantile `eta in [a_j, a_{j-1}]`.
#[derive(Debug, Clone)]
pub struct SecretaryFamily {
    alphas: Vec<f64>,
    /// `prod_{v=1}^{k-1} a_v^(1/m)` for `k = 1..=m`.
    products: Vec<f64>,
    policy: TruncationPolicy,
}

impl SecretaryFamily {
    pub fn new(sched: &QuantileSchedule, policy: TruncationPolicy) -> Self {
        let alphas = sched.alphas().to_vec();
        let m = sched.m();
        let mut products = vec![1.0; m + 1];
        let mut acc = NeumaierSum::new();
        for k in 1..=m {
            products[k] = (acc.value() / m as f64).exp();
            acc.add(alphas[k].ln());
        }
        Self { alphas, products, policy }
    }

    fn m(&self) -> usize {
        self.alphas.len() - 2
    }

    /// `f_j(eta)`: lower bound on the probability of securing a value above the level.
    pub fn f(&self, j: usize, eta: f64) -> f64 {
        let m = self.m();
        let mf = m as f64;
        let mut total = NeumaierSum::new();
        for k in 1..j {
            total.add((1.0 - self.alphas[k]) / mf);
        }
        if j > m {
            return total.value();
        }
        let hat = |v: usize| if v < j { self.alphas[v] } else { eta };
        for k in j..=m {
            let mut wk = NeumaierSum::new();
            let mut s = 0.0f64;
            for v in 0..j {
                let rows = (m - (k - 1) + v) as f64;
                let r = rows / mf * (hat(v) / hat(v + 1)).ln();
                wk.add((-s).exp() * -(-r).exp_m1() / rows);
                s += r;
            }
            let x = ((eta / self.alphas[k]).ln() / mf).max(0.0);
            let q = stable_qtk(x, &self.policy).expect("argument clamped to be non-negative");
            total.add(self.products[k] * wk.value() * q);
        }
        total.value()
    }
}

impl SegmentFamily for SecretaryFamily {
    fn branches(&self) -> Vec<(usize, f64)> {
        Vec::new()
    }

    fn segments(&self) -> Vec<Segment> {
        (1..=self.m() + 1)
            .map(|j| Segment { label: j, lo: self.alphas[j], hi: self.alphas[j - 1] })
            .collect()
    }

    fn numerator(&self, label: usize, eta: f64) -> f64 {
        self.f(label, eta)
    }

    fn weight(&self, _label: usize, eta: f64) -> f64 {
        1.0 - eta
    }
}

pub fn secretary_blind_bound(sched: &QuantileSchedule, opts: &EvalOptions) -> Result<BoundReport> {
    let fam = SecretaryFamily::new(sched, opts.truncation);
    Ok(certify(&fam, opts.target, &opts.grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlindTBounds {
    /// Lower bound on `Pr[T <= k]`.
    pub stop_by_k: f64,
    /// Lower bound on `Pr[T > k]`.
    pub survive_k: f64,
}

impl BlindTBounds {
    /// Upper bound on `Pr[T <= k]` implied by `survive_k`.
    pub fn stop_by_k_upper(&self) -> f64 {
        1.0 - self.survive_k
    }
}

/// Brackets on the stopping step `T` of the blind strategy whose step `j` uses
/// the maximum-quantile `alphas[j-1]`, with `n` steps in total.
pub fn blind_t_bounds(alphas: &[f64], k: usize, n: usize) -> Result<BlindTBounds> {
    if alphas.len() != n {
        return Err(validation(format!("expected {n} step quantiles, got {}", alphas.len())));
    }
    if k == 0 || k > n {
        return Err(validation(format!("k must lie in 1..={n}, got {k}")));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(validation(format!("quantiles must lie in (0, 1], got {a}")));
    }
    let nf = n as f64;
    let head = &alphas[..k];
    let stop_by_k = head.iter().map(|a| 1.0 - a).sum::<f64>() / nf;
    let survive_k = (head.iter().map(|a| a.ln()).sum::<f64>() / nf).exp();
    Ok(BlindTBounds { stop_by_k, survive_k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brackets_trivial_cases() {
        let b = blind_t_bounds(&[1.0; 4], 2, 4).unwrap();
        assert_eq!(b.stop_by_k, 0.0);
        assert_eq!(b.survive_k, 1.0);
        let b = blind_t_bounds(&[0.3; 5], 5, 5).unwrap();
        assert!((b.stop_by_k - 0.7).abs() < 1e-15);
        assert!((b.survive_k - 0.3).abs() < 1e-15);
        assert!(blind_t_bounds(&[0.3; 5], 6, 5).is_err());
    }

    #[test]
    fn single_threshold_unit_rate() {
        let r = single_threshold_secretary_bound(1.0, &GridOptions::default()).unwrap();
        assert!((r - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }
}
