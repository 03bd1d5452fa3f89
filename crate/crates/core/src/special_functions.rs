//! Special-function kernels shared by the bound evaluators: Poisson masses,
//! unsigned Stirling numbers of the first kind, the principal Lambert W branch
//! and the truncated series used in place of `(1 - e^-x) / x`.

use std::sync::OnceLock;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest `n` for which Stirling numbers are served from the exact table.
pub const STIRLING_EXACT_MAX: usize = 64;

/// Below this index the Poisson mass is a direct product; above it, log-space.
const POISSON_DIRECT_MAX_K: u64 = 20;

/// Series truncation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_terms: usize,
    /// Absolute tail bound at which summation may stop early. Zero disables it.
    pub tail_tolerance: f64,
}

impl TruncationPolicy {
    pub fn new(max_terms: usize, tail_tolerance: f64) -> Result<Self> {
        if max_terms == 0 {
            return Err(domain("max_terms must be at least 1"));
        }
        if !(tail_tolerance >= 0.0) {
            return Err(domain("tail_tolerance must be non-negative"));
        }
        Ok(Self { max_terms, tail_tolerance })
    }

    pub fn terms(max_terms: usize) -> Self {
        Self { max_terms: max_terms.max(1), tail_tolerance: 0.0 }
    }

    /// Truncation used for the infinite sum defining the Top-1-of-k fixed point.
    pub fn zeta_default() -> Self {
        Self::terms(200)
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::terms(30)
    }
}

/// Neumaier's variant of compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.value()
}

/// `ln k!`.
pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

/// `e^-λ λ^k / k!`.
pub fn poisson_pmf(lambda: f64, k: u64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!("poisson rate must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if k <= POISSON_DIRECT_MAX_K {
        let mut p = (-lambda).exp();
        for i in 1..=k {
            p *= lambda / i as f64;
        }
        Ok(p)
    } else {
        Ok((k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp())
    }
}

fn stirling_table() -> &'static Vec<Vec<BigUint>> {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n_max = STIRLING_EXACT_MAX;
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max + 1);
        rows.push(vec![BigUint::from(1u32)]);
        for n in 0..n_max {
            let prev = &rows[n];
            let mut next = vec![BigUint::from(0u32); n + 2];
            for k in 1..=n + 1 {
                // [n+1, k] = n [n, k] + [n, k-1]
                let mut v = prev[k - 1].clone();
                if k <= n {
                    v += &prev[k] * BigUint::from(n);
                }
                next[k] = v;
            }
            rows.push(next);
        }
        rows
    })
}

/// Unsigned Stirling number of the first kind `[n, k]`, exact for `n <= 64`.
pub fn stirling_first_unsigned(n: usize, k: usize) -> Result<BigUint> {
    if n > STIRLING_EXACT_MAX {
        return Err(Error::Range(format!(
            "stirling numbers are exact only for n <= {STIRLING_EXACT_MAX}, got {n}"
        )));
    }
    if k > n {
        return Ok(BigUint::from(0u32));
    }
    Ok(stirling_table()[n][k].clone())
}

/// Table of `[n, j] / n!` for `n <= n_max`, `j <= j_max`.
///
/// `[n, j] / n!` is the probability that a uniform permutation of `n` items has
/// exactly `j` records, so the table is filled with the probability form of the
/// Stirling recurrence, which stays in range far beyond the exact table.
pub fn record_count_table(n_max: usize, j_max: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; j_max + 1]; n_max + 1];
    p[0][0] = 1.0;
    for n in 0..n_max {
        let a = n as f64 / (n + 1) as f64;
        let b = 1.0 / (n + 1) as f64;
        for j in 0..=j_max {
            let stay = a * p[n][j];
            let step = if j > 0 { b * p[n][j - 1] } else { 0.0 };
            p[n + 1][j] = stay + step;
        }
    }
    p
}

/// Principal branch of the Lambert W function.
pub fn lambert_w(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if x.is_nan() || x < branch {
        return Err(domain(format!("lambert_w needs x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let tol = 1e-13 * x.abs().max(1.0);
    let mut w = x.ln_1p().max(-1.0);
    for _ in 0..200 {
        let ew = w.exp();
        let resid = w * ew - x;
        if resid.abs() <= 0.5 * tol {
            break;
        }
        let deriv = ew * (w + 1.0);
        if deriv == 0.0 {
            break;
        }
        let next = (w - resid / deriv).max(-1.0);
        if next == w {
            break;
        }
        w = next;
    }
    Ok(w)
}

/// Truncated series `sum_{b < T} e^-x x^b / b! / (b + 1)`, a lower bound on
/// `(1 - e^-x) / x` that stays accurate when `x` is tiny.
pub fn stable_qtk(x: f64, policy: &TruncationPolicy) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("stable_qtk needs x >= 0, got {x}")));
    }
    let mut term = (-x).exp();
    let mut acc = NeumaierSum::new();
    for beta in 0..policy.max_terms {
        let b1 = (beta + 1) as f64;
        acc.add(term / b1);
        term *= x / b1;
        if policy.tail_tolerance > 0.0 && b1 > x {
            // remaining terms shrink at least geometrically with ratio x / (beta + 2)
            let ratio = x / (b1 + 1.0);
            if ratio < 1.0 && term / (b1 + 1.0) / (1.0 - ratio) <= policy.tail_tolerance {
                break;
            }
        }
    }
    Ok(acc.value())
}

/// `(1 - e^-x) / x` with the value 1 at zero.
pub fn one_minus_exp_over(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_edges() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(0.0, 3).unwrap(), 0.0);
        assert!(poisson_pmf(-1.0, 0).is_err());
    }

    #[test]
    fn pmf_log_space_branch_matches_product() {
        let lam = 7.5;
        let mut direct = (-lam as f64).exp();
        for i in 1..=25u64 {
            direct *= lam / i as f64;
        }
        let v = poisson_pmf(lam, 25).unwrap();
        assert!((v - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn stirling_row_four() {
        let row: Vec<u64> = (0..=4)
            .map(|k| stirling_first_unsigned(4, k).unwrap().try_into().unwrap())
            .collect();
        assert_eq!(row, vec![0, 6, 11, 6, 1]);
        assert!(stirling_first_unsigned(65, 1).is_err());
        assert_eq!(stirling_first_unsigned(3, 5).unwrap(), BigUint::from(0u32));
    }

    #[test]
    fn lambert_branch_point() {
        let x = -(-1.0f64).exp();
        let w = lambert_w(x).unwrap();
        assert!((w * w.exp() - x).abs() <= 1e-13);
        assert!(lambert_w(x - 1e-9).is_err());
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = NeumaierSum::new();
        s.extend([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s.value(), 2.0);
    }
}
