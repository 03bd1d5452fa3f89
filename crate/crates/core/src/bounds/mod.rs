//! Lower-bound evaluators for the competitive ratio of every threshold family.
//!
//! Most bounds take the form `min(branches, min_j inf_x f_j(x) / w(x))` over a
//! handful of segments. The shared machinery below scans a fixed grid on each
//! segment, refines around the grid minimum by golden-section search, and
//! reports both the ratio and the defect `f - target * w` against a target.

mod curve;
mod schedules;
mod secretary;
mod top1of2;
mod top1ofk;

pub use curve::{iid_curve_bound, top1of2_iid_mthreshold_bound, CurveFamily, CurveKernel};
pub use schedules::{QuantileSchedule, RateSchedule};
pub use secretary::{
    blind_t_bounds, secretary_blind_bound, single_threshold_secretary_bound, BlindTBounds, SecretaryFamily,
    SingleThresholdFamily,
};
pub use top1of2::{
    three_threshold_c2_grid, top1of2_three_threshold_bound, top1of2_two_threshold_bound, two_threshold_g,
    two_threshold_middle, two_threshold_report, ThreeThresholdBound, ThreeThresholdFamily, TwoThresholdBound, TwoThresholdFamily,
};
pub use top1ofk::{
    top1ofk_lambertw_bound, top1ofk_record_bound, zeta_default_rate, zeta_k_residual, zeta_k_solve, LambertBound, RecordBound,
    ZetaSolution,
};

use serde::{Deserialize, Serialize};

use crate::special_functions::TruncationPolicy;

/// Grid points per segment used for certification.
pub const DEFAULT_GRID_POINTS: usize = 2000;
/// Grid points per segment used inside parameter searches.
pub const COARSE_GRID_POINTS: usize = 200;
/// Golden-section refinement stops once the bracket is this narrow.
pub const REFINE_WIDTH: f64 = 1e-12;
/// Segments narrower than this are evaluated at their endpoints only.
pub const DEGENERATE_WIDTH: f64 = 1e-12;
/// Without an explicit target, certify the computed ratio rounded down to this many decimals.
pub const DEFAULT_TARGET_DECIMALS: i32 = 9;

pub const PRECISION_LABEL: &str = "binary64 with Neumaier-compensated sums";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub points_per_segment: usize,
    pub refine: bool,
    pub refine_width: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { points_per_segment: DEFAULT_GRID_POINTS, refine: true, refine_width: REFINE_WIDTH }
    }
}

impl GridOptions {
    pub fn coarse() -> Self {
        Self { points_per_segment: COARSE_GRID_POINTS, refine: false, refine_width: REFINE_WIDTH }
    }

    pub fn with_points(points_per_segment: usize) -> Self {
        Self { points_per_segment, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalOptions {
    pub grid: GridOptions,
    /// Ratio to certify. `None` certifies the computed ratio rounded down.
    pub target: Option<f64>,
    pub truncation: TruncationPolicy,
}

impl EvalOptions {
    pub fn with_target(target: f64) -> Self {
        Self { target: Some(target), ..Self::default() }
    }

    pub fn coarse() -> Self {
        Self { grid: GridOptions::coarse(), ..Self::default() }
    }
}

/// Where a minimum was found: a segment label and the witness coordinate.
/// Constant branches carry no coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub segment: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub ratio: f64,
    pub target: f64,
    pub defect_min: f64,
    pub witness: Witness,
    pub ratio_witness: Witness,
    pub grid_points: usize,
    pub refined: bool,
    pub certified: bool,
    pub precision: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    /// Lower bound on the defect between grid nodes, when a derivative certificate ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_defect_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub label: usize,
    pub lo: f64,
    pub hi: f64,
}

/// A bound of the form `min(branches, min_j inf_x numerator_j(x) / weight_j(x))`.
pub trait SegmentFamily: Sync {
    fn branches(&self) -> Vec<(usize, f64)>;
    fn segments(&self) -> Vec<Segment>;
    fn numerator(&self, label: usize, x: f64) -> f64;
    fn weight(&self, label: usize, x: f64) -> f64;

    fn defect(&self, label: usize, x: f64, target: f64) -> f64 {
        self.numerator(label, x) - target * self.weight(label, x)
    }

    fn ratio_at(&self, label: usize, x: f64) -> f64 {
        let w = self.weight(label, x);
        if w > 0.0 {
            self.numerator(label, x) / w
        } else {
            f64::NAN
        }
    }
}

fn golden_min(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let score = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = score(g(c));
    let mut fd = score(g(d));
    for _ in 0..400 {
        if b - a <= width {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = score(g(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = score(g(d));
        }
    }
    let mid = 0.5 * (a + b);
    let fm = score(g(mid));
    [(fc, c), (fd, d), (fm, mid)].into_iter().fold((f64::INFINITY, mid), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Minimum of `g` over `[lo, hi]`: grid scan, then golden-section refinement
/// on the two grid cells around the best node. NaN values are skipped.
pub fn scan_min(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, opts: &GridOptions) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let consider = |v: f64, x: f64, best: &mut Option<(f64, f64)>| {
        if !v.is_nan() && best.map_or(true, |(bv, _)| v < bv) {
            *best = Some((v, x));
        }
    };
    if hi - lo < DEGENERATE_WIDTH {
        consider(g(lo), lo, &mut best);
        consider(g(hi), hi, &mut best);
        return best;
    }
    let n = opts.points_per_segment.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let node = |i: usize| if i == n - 1 { hi } else { lo + step * i as f64 };
    let mut best_i = None;
    for i in 0..n {
        let x = node(i);
        let v = g(x);
        if !v.is_nan() && best.map_or(true, |(bv, _)| v < bv) {
            best = Some((v, x));
            best_i = Some(i);
        }
    }
    if opts.refine {
        if let Some(i) = best_i {
            let a = node(i.saturating_sub(1));
            let b = node((i + 1).min(n - 1));
            let (v, x) = golden_min(g, a, b, opts.refine_width);
            consider(v, x, &mut best);
        }
    }
    best
}

fn floor_decimals(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).floor() / s
}

/// Computes the ratio, then the defect against the target, for any segment family.
pub fn certify<F: SegmentFamily + ?Sized>(family: &F, target: Option<f64>, opts: &GridOptions) -> BoundReport {
    let branches = family.branches();
    let segments = family.segments();

    let mut ratio = f64::INFINITY;
    let mut ratio_witness = Witness { segment: 0, value: None };
    for &(label, v) in &branches {
        if v < ratio {
            ratio = v;
            ratio_witness = Witness { segment: label, value: None };
        }
    }
    for seg in &segments {
        let g = |x: f64| family.ratio_at(seg.label, x);
        if let Some((v, x)) = scan_min(&g, seg.lo, seg.hi, opts) {
            if v < ratio {
                ratio = v;
                ratio_witness = Witness { segment: seg.label, value: Some(x) };
            }
        }
    }

    let target = target.unwrap_or_else(|| floor_decimals(ratio, DEFAULT_TARGET_DECIMALS));
    let mut defect_min = f64::INFINITY;
    let mut witness = Witness { segment: 0, value: None };
    for &(label, v) in &branches {
        let d = v - target;
        if d < defect_min {
            defect_min = d;
            witness = Witness { segment: label, value: None };
        }
    }
    for seg in &segments {
        let g = |x: f64| family.defect(seg.label, x, target);
        if let Some((v, x)) = scan_min(&g, seg.lo, seg.hi, opts) {
            if v < defect_min {
                defect_min = v;
                witness = Witness { segment: seg.label, value: Some(x) };
            }
        }
    }

    BoundReport {
        ratio,
        target,
        defect_min,
        witness,
        ratio_witness,
        grid_points: opts.points_per_segment,
        refined: opts.refine,
        certified: defect_min >= 0.0,
        precision: PRECISION_LABEL.to_string(),
        tail_bound: None,
        interval_defect_min: None,
    }
}
