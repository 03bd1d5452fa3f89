//! Discrete-clock dynamic program for the IID semi-online algorithm.
//!
//! Rows are threshold functions and columns are clock blocks. `C[j][i]` is the
//! expected number of realizations above threshold function `j` during block
//! `i`. A success consumes the current function and skips to the end of the
//! block. Internally both indices are zero-based; the public accessors take the
//! function index starting from 1, so the answer cell is `(F, 1, 0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, Witness, PRECISION_LABEL};
use crate::error::{validation, Error, Result};

/// Grid step used by default when certifying a rate matrix.
pub const DEFAULT_EPS: f64 = 0.00015;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Each function's phases listed in time order.
    #[default]
    Forward,
    /// Each function's phases listed last phase first.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    k: usize,
    p: usize,
    m: usize,
    rows: Vec<Vec<f64>>,
}

/// Rate input file: `{k, p, m, layout, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrixSpec {
    pub k: usize,
    pub p: usize,
    pub m: usize,
    #[serde(default)]
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl RateMatrixSpec {
    pub fn build(&self) -> Result<RateMatrix> {
        build_rate_matrix(&self.values, self.k, self.p, self.m, self.layout)
    }
}

pub fn build_rate_matrix(flat: &[f64], k: usize, p: usize, m: usize, layout: Layout) -> Result<RateMatrix> {
    if k == 0 || p == 0 || m == 0 {
        return Err(validation("k, p and m must be positive"));
    }
    if flat.len() != k * p {
        return Err(validation(format!("expected k*p = {} rates, got {}", k * p, flat.len())));
    }
    if m % p != 0 {
        return Err(validation(format!("phase count {p} must divide clock resolution {m}")));
    }
    if let Some(c) = flat.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(validation(format!("rates must be positive and finite, got {c}")));
    }
    let per = m / p;
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let phases = &flat[j * p..(j + 1) * p];
            (0..p)
                .flat_map(|ph| {
                    let v = match layout {
                        Layout::Forward => phases[ph],
                        Layout::Reversed => phases[p - 1 - ph],
                    };
                    std::iter::repeat(v).take(per)
                })
                .collect()
        })
        .collect();
    for (j, row) in rows.iter().enumerate() {
        if row.windows(2).any(|w| w[1] < w[0]) {
            return Err(validation(format!("row {} must be non-decreasing in time", j + 1)));
        }
    }
    Ok(RateMatrix { k, p, m, rows })
}

impl RateMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Row of threshold function `j`, zero-based.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.rows[j][i]
    }

    pub fn max_rate(&self) -> f64 {
        self.rows.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Distinct rates, ascending.
    pub fn distinct_rates(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Which branch applies when `l'` sits exactly on a rate. The value is the
/// same either way; derivatives are one-sided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DPTable {
    k: usize,
    m: usize,
    prob: [Vec<f64>; 2],
    d1: Option<[Vec<f64>; 2]>,
    d2: Option<[Vec<f64>; 2]>,
}

impl DPTable {
    fn idx(&self, j: usize, i: usize) -> usize {
        j * (self.m + 1) + i
    }

    fn cell(&self, t: &[Vec<f64>; 2], secured: bool, j: usize, i: usize) -> f64 {
        assert!(j >= 1 && j <= self.k + 1 && i <= self.m, "cell ({j}, {i}) out of range");
        t[secured as usize][self.idx(j - 1, i)]
    }

    /// `Prob[b][j][i]` with `j` starting from 1.
    pub fn prob(&self, secured: bool, j: usize, i: usize) -> f64 {
        self.cell(&self.prob, secured, j, i)
    }

    pub fn d1(&self, secured: bool, j: usize, i: usize) -> Option<f64> {
        self.d1.as_ref().map(|t| self.cell(t, secured, j, i))
    }

    pub fn d2(&self, secured: bool, j: usize, i: usize) -> Option<f64> {
        self.d2.as_ref().map(|t| self.cell(t, secured, j, i))
    }

    /// `Pr[ALG >= l]`.
    pub fn answer(&self) -> f64 {
        self.prob(false, 1, 0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DpOptions {
    pub derivatives: bool,
    pub side: Side,
}

pub fn semionline_dp(c: &RateMatrix, lprime: f64) -> DPTable {
    semionline_dp_with(c, lprime, DpOptions::default())
}

pub fn semionline_dp_with(c: &RateMatrix, l: f64, opts: DpOptions) -> DPTable {
    let (k, m) = (c.k, c.m);
    let width = m + 1;
    let size = (k + 1) * width;
    let idx = |j: usize, i: usize| j * width + i;
    let mut prob = [vec![0.0; size], vec![0.0; size]];
    let mut d1 = [vec![0.0; size], vec![0.0; size]];
    let mut d2 = [vec![0.0; size], vec![0.0; size]];
    for j in 0..=k {
        prob[1][idx(j, m)] = 1.0;
    }
    for i in 0..=m {
        prob[1][idx(k, i)] = 1.0;
    }
    let mf = m as f64;
    for i in (0..m).rev() {
        for j in (0..k).rev() {
            let cj = c.rows[j][i];
            let stay = (-cj / mf).exp();
            let arrive = -(-cj / mf).exp_m1();
            let nxt = idx(j + 1, i + 1);
            let below = match opts.side {
                Side::Left => l <= cj,
                Side::Right => l < cj,
            };
            // value, first and second derivative of the continuation after a success
            let (mix, mix1, mix2) = if below {
                let w = l / cj;
                let (p1, p0) = (prob[1][nxt], prob[0][nxt]);
                let (q1, q0) = (d1[1][nxt], d1[0][nxt]);
                let (r1, r0) = (d2[1][nxt], d2[0][nxt]);
                (
                    w * p1 + (1.0 - w) * p0,
                    (p1 - p0) / cj + w * q1 + (1.0 - w) * q0,
                    2.0 * (q1 - q0) / cj + w * r1 + (1.0 - w) * r0,
                )
            } else {
                (prob[1][nxt], d1[1][nxt], d2[1][nxt])
            };
            let here = idx(j, i);
            let later = idx(j, i + 1);
            for b in 0..2 {
                prob[b][here] = stay * prob[b][later] + arrive * mix;
                if opts.derivatives {
                    d1[b][here] = stay * d1[b][later] + arrive * mix1;
                    d2[b][here] = stay * d2[b][later] + arrive * mix2;
                }
            }
        }
    }
    let (d1, d2) = if opts.derivatives { (Some(d1), Some(d2)) } else { (None, None) };
    DPTable { k, m, prob, d1, d2 }
}

/// `Pr[ALG >= l] - target (1 - e^-l')`.
pub fn semionline_defect(c: &RateMatrix, lprime: f64, target: f64) -> f64 {
    semionline_dp(c, lprime).answer() + target * (-lprime).exp_m1()
}

/// Value the DP assigns to levels above every rate: success on any arrival.
pub fn tail_value(c: &RateMatrix) -> f64 {
    let total: f64 = c.rows[0].iter().sum::<f64>() / c.m as f64;
    -(-total).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Also bound the defect between grid nodes through the second-derivative table.
    pub derivatives: bool,
}

#[derive(Debug, Clone, Copy)]
struct NodeEval {
    l: f64,
    value: f64,
    d1_right: f64,
    d2_left: f64,
    d2_right: f64,
}

fn eval_node(c: &RateMatrix, l: f64, derivatives: bool) -> NodeEval {
    if !derivatives {
        let t = semionline_dp(c, l);
        return NodeEval { l, value: t.answer(), d1_right: f64::NAN, d2_left: f64::NAN, d2_right: f64::NAN };
    }
    let left = semionline_dp_with(c, l, DpOptions { derivatives: true, side: Side::Left });
    let right = semionline_dp_with(c, l, DpOptions { derivatives: true, side: Side::Right });
    NodeEval {
        l,
        value: left.answer(),
        d1_right: right.d1(false, 1, 0).unwrap(),
        d2_left: left.d2(false, 1, 0).unwrap(),
        d2_right: right.d2(false, 1, 0).unwrap(),
    }
}

fn grid_nodes(max_c: f64, eps: f64) -> Vec<f64> {
    let n = (max_c / eps).floor() as usize;
    let mut v: Vec<f64> = (1..=n).map(|i| i as f64 * eps).collect();
    if v.last().map_or(true, |&x| x < max_c) {
        v.push(max_c);
    }
    v
}

/// Checks the defect on the grid `eps, 2 eps, ...` over `(0, max C]` and the
/// tail case above every rate. With `derivatives`, additionally bounds the
/// defect between nodes: on each piece between rates the DP value is a
/// polynomial of degree at most `k` in `l'`, so for `k <= 3` its second
/// derivative is linear and peaks at the interval ends.
pub fn semionline_verify(c: &RateMatrix, target: f64, eps: f64, opts: VerifyOptions) -> Result<BoundReport> {
    if !(eps > 0.0) {
        return Err(validation(format!("grid step must be positive, got {eps}")));
    }
    if opts.derivatives && c.k > 3 {
        return Err(Error::Unsupported(format!(
            "interval certificate needs a piecewise polynomial of degree <= 3, got k = {}",
            c.k
        )));
    }
    let max_c = c.max_rate();
    let tail = tail_value(c);
    let grid = grid_nodes(max_c, eps);

    let evals: Vec<NodeEval> = grid.par_iter().map(|&l| eval_node(c, l, false)).collect();

    let mut ratio = tail;
    let mut ratio_witness = Witness { segment: 0, value: None };
    let mut defect_min = tail - target;
    let mut witness = Witness { segment: 0, value: None };
    for e in &evals {
        let w = -(-e.l).exp_m1();
        let r = e.value / w;
        if r < ratio {
            ratio = r;
            ratio_witness = Witness { segment: 1, value: Some(e.l) };
        }
        let d = e.value - target * w;
        if d < defect_min {
            defect_min = d;
            witness = Witness { segment: 1, value: Some(e.l) };
        }
    }

    let interval_defect_min = if opts.derivatives {
        let mut nodes = grid.clone();
        nodes.extend(c.distinct_rates().into_iter().filter(|&r| r > 0.0 && r <= max_c));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let ev: Vec<NodeEval> = nodes.par_iter().map(|&l| eval_node(c, l, true)).collect();
        let origin = eval_node(c, 0.0, true);
        Some(interval_certificate(&origin, &ev, target))
    } else {
        None
    };

    let certified = defect_min >= 0.0 && interval_defect_min.map_or(true, |v| v >= 0.0);
    Ok(BoundReport {
        ratio,
        target,
        defect_min,
        witness,
        ratio_witness,
        grid_points: grid.len(),
        refined: false,
        certified,
        precision: PRECISION_LABEL.to_string(),
        tail_bound: None,
        interval_defect_min,
    })
}

fn interval_certificate(origin: &NodeEval, nodes: &[NodeEval], target: f64) -> f64 {
    let defect = |e: &NodeEval| e.value + target * (-e.l).exp_m1();
    // first interval: f(0) = 0, so f(l) >= l (f'(0+) - M l / 2)
    let first = &nodes[0];
    let h0 = first.l;
    let m0 = origin.d2_right.abs().max(first.d2_left.abs()) + target;
    let slope0 = origin.d1_right - target;
    let mut lower = (h0 * (slope0 - m0 * h0 / 2.0)).min(0.0);
    for w in nodes.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let h = b.l - a.l;
        let curv = a.d2_right.abs().max(b.d2_left.abs()) + target * (-a.l).exp();
        let v = defect(a).min(defect(b)) - curv * h * h / 8.0;
        lower = lower.min(v);
    }
    lower
}
