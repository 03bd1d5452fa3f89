//! Non-IID Top-1-of-2 bounds with two and three maximum-quantile thresholds
//! (`Pr[Z <= tau_i] = e^-c_i`).

use serde::{Deserialize, Serialize};

use super::{certify, scan_min, BoundReport, EvalOptions, GridOptions, Segment, SegmentFamily};
use crate::error::{validation, Result};

/// Middle branch of the two-threshold bound, already minimized over the level.
pub fn two_threshold_middle(c1: f64, c2: f64) -> f64 {
    let (e1, e2) = (c1.exp(), c2.exp());
    (-c1 - c2).exp() * (e1 * (e2 - 1.0) + 2.0 * ((e1 - 1.0) * (e2 - 1.0)).sqrt() - e2 + 2.0)
}

/// The middle branch before minimization, as a function of the level rate `q in [c2, c1]`.
pub fn two_threshold_g(c1: f64, c2: f64, q: f64) -> f64 {
    let keep = -(-q).exp_m1();
    let first = (-(c1 - q)).exp() * keep;
    let second = -(-(c1 - q)).exp_m1() * -(-c2).exp_m1();
    (first + second) / keep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoThresholdBound {
    pub ratio: f64,
    pub branches: [f64; 3],
}

fn check_descending(c: &[f64]) -> Result<()> {
    let ok = c.iter().all(|x| *x > 0.0 && x.is_finite()) && c.windows(2).all(|w| w[0] > w[1]);
    if ok {
        Ok(())
    } else {
        Err(validation(format!("rates must be positive and strictly decreasing, got {c:?}")))
    }
}

pub fn top1of2_two_threshold_bound(c1: f64, c2: f64) -> Result<TwoThresholdBound> {
    check_descending(&[c1, c2])?;
    let branches = [
        -(-c1).exp_m1(),
        two_threshold_middle(c1, c2),
        (-c2).exp() + (-c1).exp() * c2,
    ];
    let ratio = branches.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TwoThresholdBound { ratio, branches })
}

#[derive(Debug, Clone, Copy)]
pub struct TwoThresholdFamily {
    pub c1: f64,
    pub c2: f64,
}

impl SegmentFamily for TwoThresholdFamily {
    fn branches(&self) -> Vec<(usize, f64)> {
        vec![(1, -(-self.c1).exp_m1()), (3, (-self.c2).exp() + (-self.c1).exp() * self.c2)]
    }

    fn segments(&self) -> Vec<Segment> {
        vec![Segment { label: 2, lo: self.c2, hi: self.c1 }]
    }

    fn numerator(&self, _label: usize, q: f64) -> f64 {
        two_threshold_g(self.c1, self.c2, q)
    }

    fn weight(&self, _label: usize, _x: f64) -> f64 {
        1.0
    }
}

/// Two-threshold bound with the middle branch taken as a grid infimum of `g`.
pub fn two_threshold_report(c1: f64, c2: f64, opts: &EvalOptions) -> Result<BoundReport> {
    check_descending(&[c1, c2])?;
    Ok(certify(&TwoThresholdFamily { c1, c2 }, opts.target, &opts.grid))
}

#[derive(Debug, Clone, Copy)]
pub struct ThreeThresholdFamily {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl ThreeThresholdFamily {
    pub fn branch(&self, label: usize, l: f64) -> f64 {
        let (c1, c2, c3) = (self.c1, self.c2, self.c3);
        let e = f64::exp;
        match label {
            2 => e(-c1 - c2 + l) * (-e(c1) - e(c2) + e(c1 + c2) + e(l)) / l.exp_m1(),
            3 => {
                e(-c1 - c2 - c3 + l)
                    * (e(c2 + l) + e(c1 + c3 + l) - e(c2 + c3 + l) - e(2.0 * c2) - e(c1 + c3) + e(2.0 * c2 + c3))
                    / l.exp_m1()
            }
            4 => e(l) * (-e(-c1) * (l + 1.0) + e(-c2) + e(-c1 + c2 - c3) + e(-c1) * c3),
            _ => panic!("three-threshold bound has no segment {label}"),
        }
    }

    /// The four branches in their printed closed forms.
    pub fn closed_forms(&self) -> [f64; 4] {
        let (c1, c2, c3) = (self.c1, self.c2, self.c3);
        let e = f64::exp;
        let c3_form = (e(c2) * (e(c2) - 2.0) * (e(c3) - 1.0)
            + e(c1 + c3)
            + 2.0 * (e(c2) * (e(c2) - 1.0) * (e(c3) - 1.0) * (e(c2) + e(c1 + c3) - e(c2 + c3))).sqrt())
            * ((c1 + c2 + c3).cosh() - (c1 + c2 + c3).sinh());
        [
            -(-c1).exp_m1(),
            two_threshold_middle(c1, c2),
            c3_form,
            e(-c1) * c3 - e(-c1) + e(-c2) + e(-c1 + c2 - c3),
        ]
    }
}

impl SegmentFamily for ThreeThresholdFamily {
    fn branches(&self) -> Vec<(usize, f64)> {
        vec![(1, -(-self.c1).exp_m1())]
    }

    fn segments(&self) -> Vec<Segment> {
        vec![
            Segment { label: 2, lo: self.c2, hi: self.c1 },
            Segment { label: 3, lo: self.c3, hi: self.c2 },
            Segment { label: 4, lo: 0.0, hi: self.c1 },
        ]
    }

    fn numerator(&self, label: usize, l: f64) -> f64 {
        self.branch(label, l)
    }

    fn weight(&self, _label: usize, _x: f64) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeThresholdBound {
    /// Certified value: the first branch and the grid infima of the others.
    pub ratio: f64,
    pub grid: [f64; 4],
    pub closed_form: [f64; 4],
    pub closed_form_ratio: f64,
    pub report: BoundReport,
}

pub fn top1of2_three_threshold_bound(c1: f64, c2: f64, c3: f64, opts: &EvalOptions) -> Result<ThreeThresholdBound> {
    check_descending(&[c1, c2, c3])?;
    let fam = ThreeThresholdFamily { c1, c2, c3 };
    let report = certify(&fam, opts.target, &opts.grid);
    let mut grid = [-(-c1).exp_m1(), 0.0, 0.0, 0.0];
    for seg in fam.segments() {
        let g = |l: f64| fam.branch(seg.label, l);
        grid[seg.label - 1] = scan_min(&g, seg.lo, seg.hi, &opts.grid).map(|(v, _)| v).unwrap_or(f64::NAN);
    }
    let closed_form = fam.closed_forms();
    let closed_form_ratio = closed_form.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ThreeThresholdBound { ratio: report.ratio, grid, closed_form, closed_form_ratio, report })
}

/// Grid infimum of the second three-threshold branch, for cross-checks.
pub fn three_threshold_c2_grid(c1: f64, c2: f64, grid: &GridOptions) -> f64 {
    let fam = ThreeThresholdFamily { c1, c2, c3: c2 / 2.0 };
    scan_min(&|l| fam.branch(2, l), c2, c1, grid).map(|(v, _)| v).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_enforced() {
        assert!(top1of2_two_threshold_bound(0.5, 1.0).is_err());
        assert!(top1of2_three_threshold_bound(1.0, 0.5, 0.6, &EvalOptions::default()).is_err());
    }

    #[test]
    fn equal_rates_middle_is_one() {
        for c in [0.1, 1.0, 3.0] {
            assert!((two_threshold_middle(c, c) - 1.0).abs() < 1e-12);
        }
    }
}
