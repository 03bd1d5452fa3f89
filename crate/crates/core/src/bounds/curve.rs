//! Step-curve bounds for IID instances: the single-choice curve and the
//! Top-1-of-2 m-threshold variant. Both share the segment layout: segment `j`
//! covers `l' in [c_{j-1}, c_j]` with `c_0 = 0`, and the global branch covers
//! `l' > c_m`.

use super::{certify, BoundReport, EvalOptions, RateSchedule, Segment, SegmentFamily};
use crate::error::Result;
use crate::special_functions::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKernel {
    /// Single acceptance.
    Single,
    /// Accept the first value above the curve, then the first value above it.
    TopTwo,
}

#[derive(Debug, Clone)]
pub struct CurveFamily {
    /// `c[0] = 0`, then `c_1..c_m`.
    c: Vec<f64>,
    /// `lamb[k] = (1/m) sum_{i<k} c_i` for `k = 1..=m+1`; `lamb[0]` unused.
    lamb: Vec<f64>,
    kernel: CurveKernel,
}

impl CurveFamily {
    pub fn new(sched: &RateSchedule, kernel: CurveKernel) -> Result<Self> {
        sched.require_ascending()?;
        let m = sched.m();
        let mut c = Vec::with_capacity(m + 1);
        c.push(0.0);
        c.extend_from_slice(sched.steps());
        let mut lamb = vec![0.0; m + 2];
        let mut acc = NeumaierSum::new();
        for k in 1..=m + 1 {
            lamb[k] = acc.value() / m as f64;
            if k <= m {
                acc.add(c[k]);
            }
        }
        Ok(Self { c, lamb, kernel })
    }

    fn m(&self) -> usize {
        self.c.len() - 1
    }

    fn term(&self, k: usize, l: f64) -> f64 {
        let m = self.m() as f64;
        let ck = self.c[k];
        let decay = (-self.lamb[k]).exp();
        match self.kernel {
            CurveKernel::Single => decay * -(-ck / m).exp_m1() * l / ck,
            CurveKernel::TopTwo => {
                let inner = m * ck.exp() * l * (ck / m).exp_m1() * (2.0 * ck - l)
                    + ck * l * (k as f64 * ck / m).exp() * (l - ck);
                decay * (-(m + 1.0) / m * ck).exp() * inner / (m * ck * ck)
            }
        }
    }

    /// `f_j(l')`, the probability mass the curve secures above the level with rate `l'`.
    pub fn f(&self, j: usize, l: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.add(-(-self.lamb[j]).exp_m1());
        for k in j..=self.m() {
            acc.add(self.term(k, l));
        }
        acc.value()
    }
}

impl SegmentFamily for CurveFamily {
    fn branches(&self) -> Vec<(usize, f64)> {
        let total = self.lamb[self.m() + 1];
        vec![(0, -(-total).exp_m1())]
    }

    fn segments(&self) -> Vec<Segment> {
        (1..=self.m()).map(|j| Segment { label: j, lo: self.c[j - 1], hi: self.c[j] }).collect()
    }

    fn numerator(&self, label: usize, x: f64) -> f64 {
        self.f(label, x)
    }

    fn weight(&self, _label: usize, x: f64) -> f64 {
        -(-x).exp_m1()
    }
}

/// Single-choice IID bound for an ascending step curve.
pub fn iid_curve_bound(sched: &RateSchedule, opts: &EvalOptions) -> Result<BoundReport> {
    let fam = CurveFamily::new(sched, CurveKernel::Single)?;
    Ok(certify(&fam, opts.target, &opts.grid))
}

/// IID Top-1-of-2 bound for an ascending step curve.
pub fn top1of2_iid_mthreshold_bound(sched: &RateSchedule, opts: &EvalOptions) -> Result<BoundReport> {
    let fam = CurveFamily::new(sched, CurveKernel::TopTwo)?;
    Ok(certify(&fam, opts.target, &opts.grid))
}
