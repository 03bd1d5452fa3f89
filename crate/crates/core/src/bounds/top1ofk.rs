//! IID Top-1-of-k bounds: the Lambert-W single-threshold rate, the record
//! (raise-on-accept) fixed point `zeta_k`, and the super-exponential bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_functions::{lambert_w, ln_factorial, record_count_table, NeumaierSum, TruncationPolicy};

/// Largest admissible identity residual `|e^-c - c^k/k!|`.
pub const LAMBERT_IDENTITY_TOL: f64 = 1e-10;
/// Bracket searched for the fixed point.
pub const ZETA_BRACKET: (f64, f64) = (1e-6, 50.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambertBound {
    pub c: f64,
    pub ratio: f64,
    pub identity_residual: f64,
}

/// `c = k W((k!)^(1/k) / k)`, the rate at which `1 - e^-c = 1 - c^k / k!`.
pub fn top1ofk_lambertw_bound(k: u32) -> Result<LambertBound> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let kf = k as f64;
    let lnf = ln_factorial(k as u64);
    let c = kf * lambert_w((lnf / kf).exp() / kf)?;
    let identity_residual = ((-c).exp() - (kf * c.ln() - lnf).exp()).abs();
    if identity_residual >= LAMBERT_IDENTITY_TOL {
        return Err(Error::Solver(format!("identity residual {identity_residual:e} at k = {k}")));
    }
    Ok(LambertBound { c, ratio: -(-c).exp_m1(), identity_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaSolution {
    pub zeta: f64,
    pub ratio: f64,
    pub residual: f64,
    /// Upper bound on the Poisson mass dropped by truncating the series.
    pub tail_bound: f64,
    pub terms: usize,
}

/// `LHS - RHS` of the fixed-point equation at `x`, with the series over `i`
/// truncated at `policy.max_terms`, and a bound on the dropped tail.
pub fn zeta_k_residual(k: usize, x: f64, policy: &TruncationPolicy) -> (f64, f64) {
    let t = policy.max_terms.max(k + 1);
    let p = record_count_table(t + 1, k);
    let mut rhs = NeumaierSum::new();
    let mut pois = (-x).exp();
    for i in 0..t {
        if i < k {
            rhs.add(pois);
        } else {
            let records: f64 = p[i + 1][..=k].iter().sum();
            rhs.add(pois * records);
        }
        pois *= x / (i + 1) as f64;
    }
    // pois now holds e^-x x^t / t!; later terms shrink geometrically once t + 1 > x
    let ratio = x / (t + 1) as f64;
    let tail = if ratio < 1.0 { pois / (1.0 - ratio) } else { f64::INFINITY };
    (-(-x).exp_m1() - rhs.value(), tail)
}

pub fn zeta_k_solve(k: usize, policy: &TruncationPolicy) -> Result<ZetaSolution> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let h = |x: f64| zeta_k_residual(k, x, policy).0;
    let (mut lo, mut hi) = ZETA_BRACKET;
    let (hlo, hhi) = (h(lo), h(hi));
    if !(hlo < 0.0 && hhi > 0.0) {
        return Err(Error::Solver(format!(
            "fixed point not bracketed in [{lo}, {hi}]: residuals {hlo:e}, {hhi:e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zeta = 0.5 * (lo + hi);
    let (residual, tail_bound) = zeta_k_residual(k, zeta, policy);
    Ok(ZetaSolution {
        zeta,
        ratio: -(-zeta).exp_m1(),
        residual: residual.abs(),
        tail_bound,
        terms: policy.max_terms,
    })
}

/// Fixed point `zeta_k` under the default truncation.
pub fn zeta_default_rate(k: usize) -> Result<f64> {
    Ok(zeta_k_solve(k, &TruncationPolicy::zeta_default())?.zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordBound {
    pub ratio: f64,
    /// Initial rate `e^sqrt(k)` of the matching raise-on-accept strategy.
    pub rate: f64,
}

pub fn top1ofk_record_bound(k: u32) -> Result<RecordBound> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let kf = k as f64;
    Ok(RecordBound { ratio: 1.0 - kf.powf(-kf / 5.0), rate: kf.sqrt().exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_one_is_one() {
        let z = zeta_k_solve(1, &TruncationPolicy::zeta_default()).unwrap();
        assert!((z.zeta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn record_bound_values() {
        assert!((top1ofk_record_bound(5).unwrap().ratio - 0.8).abs() < 1e-15);
        assert_eq!(top1ofk_record_bound(1).unwrap().ratio, 0.0);
    }
}
