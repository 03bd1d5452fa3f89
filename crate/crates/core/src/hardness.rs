//! Four-variable Top-1-of-2 instance bounding every algorithm from above.
//!
//! `X_i` equals `b_i` with probability `p_i` and zero otherwise, with
//! `b_i = c_i beta` for `i <= 3`, `b_4 = 1`, `p_1 = 1` and `p_4 = c_4 beta`.
//! Six algorithms cover every sensible decision path; their expectations and
//! the `beta -> 0` limits of their ratios to the prophet are closed forms.

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardnessParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub p2: f64,
    pub p3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardnessValues {
    /// `E[A_1..A_6]`.
    pub algorithms: [f64; 6],
    /// `E[Z]`.
    pub prophet: f64,
}

impl HardnessValues {
    pub fn ratios(&self) -> [f64; 6] {
        self.algorithms.map(|a| a / self.prophet)
    }

    pub fn best(&self) -> f64 {
        self.algorithms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl HardnessParams {
    /// Values `b_1..b_4` and probabilities `p_1..p_4` at a concrete `beta`.
    pub fn concrete(&self, beta: f64) -> Result<([f64; 4], [f64; 4])> {
        if !(beta > 0.0) {
            return Err(validation(format!("beta must be positive, got {beta}")));
        }
        let b = [self.c1 * beta, self.c2 * beta, self.c3 * beta, 1.0];
        let p = [1.0, self.p2, self.p3, self.c4 * beta];
        if !(b[0] > 0.0 && b.windows(2).all(|w| w[0] < w[1])) {
            return Err(validation(format!("values must satisfy 0 < b1 < b2 < b3 < b4, got {b:?}")));
        }
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(validation(format!("probabilities must lie in [0, 1], got {p:?}")));
        }
        Ok((b, p))
    }

    pub fn instance(&self, beta: f64) -> Result<Vec<Distribution>> {
        let (b, p) = self.concrete(beta)?;
        Ok(vec![
            Distribution::Deterministic { value: b[0] },
            Distribution::TwoPoint { value: b[1], p: p[1] },
            Distribution::TwoPoint { value: b[2], p: p[2] },
            Distribution::TwoPoint { value: b[3], p: p[3] },
        ])
    }
}

/// Expectations of the six algorithms and of the prophet for arbitrary
/// values and probabilities.
pub fn expected_values_raw(b: [f64; 4], p: [f64; 4]) -> HardnessValues {
    let q = p.map(|x| 1.0 - x);
    let a4 = p[3] * b[3] + q[3] * p[2] * b[2];
    let algorithms = [
        p[1] * b[1] + q[1] * p[2] * b[2] + q[1] * q[2] * p[3] * b[3] + q[1] * q[2] * q[3] * b[0],
        p[2] * b[2] + q[2] * p[3] * b[3] + q[2] * q[3] * b[0],
        p[3] * b[3] + q[3] * b[0],
        a4,
        p[1] * (p[2] * b[2] + q[2] * p[3] * b[3] + q[2] * q[3] * b[1]) + q[1] * a4,
        p[1] * (p[3] * b[3] + q[3] * b[1]) + q[1] * a4,
    ];
    let mut prophet = 0.0;
    for i in 0..4 {
        let later: f64 = q[i + 1..].iter().product();
        prophet += later * p[i] * b[i];
    }
    HardnessValues { algorithms, prophet }
}

pub fn hardness_expected_values(params: &HardnessParams, beta: f64) -> Result<HardnessValues> {
    let (b, p) = params.concrete(beta)?;
    Ok(expected_values_raw(b, p))
}

/// `lim_{beta -> 0} E[A_i] / E[Z]`.
pub fn hardness_limit_ratios(params: &HardnessParams) -> Result<[f64; 6]> {
    let HardnessParams { c1, c2, c3, c4, p2, p3 } = *params;
    let d = c1 * (p2 - 1.0) * (p3 - 1.0) - c2 * p2 * (p3 - 1.0) + c3 * p3 + c4;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Degenerate("limit denominator vanishes".into()));
    }
    Ok([
        ((c2 - c4) * p2 + c1 * (p2 - 1.0) * (p3 - 1.0) + (c4 - c3) * (p2 - 1.0) * p3 + c4) / d,
        (-(c1 - c3 + c4) * p3 + c1 + c4) / d,
        (c1 + c4) / d,
        (c3 * p3 + c4) / d,
        (c2 * p2 + p3 * (c3 - (c2 + c4) * p2) + c4) / d,
        (c2 * p2 - c3 * (p2 - 1.0) * p3 + c4) / d,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_certain_prophet_is_top_value() {
        let v = expected_values_raw([0.1, 0.2, 0.3, 1.0], [1.0; 4]);
        assert_eq!(v.prophet, 1.0);
    }

    #[test]
    fn p3_zero_collapses_second_and_third() {
        let p = HardnessParams { c1: 1.0, c2: 2.0, c3: 3.0, c4: 0.9, p2: 0.4, p3: 0.0 };
        let a = hardness_limit_ratios(&p).unwrap();
        assert!((a[1] - a[2]).abs() < 1e-15);
    }

    #[test]
    fn ordering_checked() {
        let p = HardnessParams { c1: 3.0, c2: 2.0, c3: 1.0, c4: 0.9, p2: 0.4, p3: 0.1 };
        assert!(hardness_expected_values(&p, 1e-4).is_err());
    }
}
