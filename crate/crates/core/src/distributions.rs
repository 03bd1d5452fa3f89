//! Random-variable descriptions, threshold solvers and arrival sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::rng::trial_rng;
use crate::special_functions::NeumaierSum;

/// Fixed bisection length for the threshold solvers.
pub const BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    /// `value` with probability `p`, zero otherwise.
    TwoPoint { value: f64, p: f64 },
    Deterministic { value: f64 },
    /// Uniform on `[0, scale]`.
    ScaledUniform { scale: f64 },
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Distribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Uniform { lo, hi } => lo >= 0.0 && lo < hi && hi.is_finite(),
            Distribution::TwoPoint { value, p } => value >= 0.0 && value.is_finite() && (0.0..=1.0).contains(&p),
            Distribution::Deterministic { value } => value >= 0.0 && value.is_finite(),
            Distribution::ScaledUniform { scale } => scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(validation(format!("invalid distribution {self:?}")))
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Distribution::Uniform { .. } | Distribution::ScaledUniform { .. })
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { lo, hi } => (lo, hi),
            Distribution::ScaledUniform { scale } => (0.0, scale),
            Distribution::TwoPoint { value, .. } => (0.0, value),
            Distribution::Deterministic { value } => (value, value),
        }
    }

    /// Largest point of the support.
    pub fn support_hi(&self) -> f64 {
        self.bounds().1
    }

    /// `Pr[X <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { .. } | Distribution::ScaledUniform { .. } => {
                let (lo, hi) = self.bounds();
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
            Distribution::TwoPoint { value, p } => {
                if x < 0.0 {
                    0.0
                } else if x < value {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Distribution::Deterministic { value } => {
                if x < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// `Pr[X >= x]`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { .. } | Distribution::ScaledUniform { .. } => {
                let (lo, hi) = self.bounds();
                ((hi - x) / (hi - lo)).clamp(0.0, 1.0)
            }
            Distribution::TwoPoint { value, p } => {
                if x <= 0.0 {
                    1.0
                } else if x <= value {
                    p
                } else {
                    0.0
                }
            }
            Distribution::Deterministic { value } => {
                if x <= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::TwoPoint { value, p } => value * p,
            Distribution::Deterministic { value } => value,
            _ => {
                let (lo, hi) = self.bounds();
                0.5 * (lo + hi)
            }
        }
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::TwoPoint { value, p } => {
                if u >= 1.0 - p {
                    value
                } else {
                    0.0
                }
            }
            Distribution::Deterministic { value } => value,
            _ => {
                let (lo, hi) = self.bounds();
                lo + u * (hi - lo)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }

    /// Median of `X` conditioned on `X` in `[a, b]`.
    pub fn conditional_median(&self, a: f64, b: f64) -> Result<f64> {
        if !self.is_continuous() {
            return Err(Error::Unsupported(format!("conditional median of {self:?}")));
        }
        let (lo, hi) = self.bounds();
        let (a, b) = (a.max(lo), b.min(hi));
        if a > b {
            return Err(domain("conditioning interval misses the support"));
        }
        Ok(0.5 * (a + b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub index: usize,
    pub value: f64,
    pub time: f64,
}

/// Serialized form of an instance. `repeat` replicates a single listed member.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    members: Vec<Distribution>,
    #[serde(default)]
    iid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repeat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    members: Vec<Distribution>,
    iid: bool,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        match f.repeat {
            Some(n) => {
                if f.members.len() != 1 {
                    return Err(validation("repeat needs exactly one listed member"));
                }
                Instance::iid(f.members[0], n)
            }
            None => Instance::new(f.members, f.iid),
        }
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        if inst.iid && inst.members.len() > 1 {
            InstanceFile { members: vec![inst.members[0]], iid: true, repeat: Some(inst.members.len()) }
        } else {
            InstanceFile { members: inst.members, iid: inst.iid, repeat: None }
        }
    }
}

impl Instance {
    pub fn new(members: Vec<Distribution>, iid: bool) -> Result<Self> {
        if members.is_empty() {
            return Err(validation("an instance needs at least one member"));
        }
        for m in &members {
            m.validate()?;
        }
        if iid && members.iter().any(|m| *m != members[0]) {
            return Err(validation("iid flag set but members differ"));
        }
        Ok(Self { members, iid })
    }

    pub fn iid(member: Distribution, n: usize) -> Result<Self> {
        Self::new(vec![member; n], true)
    }

    pub fn iid_uniform(n: usize) -> Self {
        Self::iid(Distribution::Uniform { lo: 0.0, hi: 1.0 }, n).expect("unit uniform is valid")
    }

    pub fn members(&self) -> &[Distribution] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_iid(&self) -> bool {
        self.iid
    }

    fn require_continuous(&self) -> Result<()> {
        match self.members.iter().find(|m| !m.is_continuous()) {
            Some(m) => Err(Error::Unsupported(format!("threshold solvers need continuous members, got {m:?}"))),
            None => Ok(()),
        }
    }

    fn support_hi(&self) -> f64 {
        self.members.iter().map(|m| m.support_hi()).fold(0.0, f64::max)
    }

    /// `sum_i Pr[X_i >= tau]`.
    pub fn survival_sum(&self, tau: f64) -> f64 {
        if self.iid {
            return self.members.len() as f64 * self.members[0].survival(tau);
        }
        let mut acc = NeumaierSum::new();
        acc.extend(self.members.iter().map(|m| m.survival(tau)));
        acc.value()
    }

    /// `ln Pr[max_i X_i <= tau]`.
    pub fn ln_max_cdf(&self, tau: f64) -> f64 {
        if self.iid {
            return self.members.len() as f64 * self.members[0].cdf(tau).ln();
        }
        let mut acc = NeumaierSum::new();
        for m in &self.members {
            let f = m.cdf(tau);
            if f <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc.add(f.ln());
        }
        acc.value()
    }

    /// Expected maximum, by integrating the survival function of the maximum.
    pub fn expected_max(&self) -> f64 {
        let hi = self.support_hi();
        let n = 20_000;
        let h = hi / n as f64;
        // Simpson on 1 - prod F_i
        let g = |x: f64| 1.0 - self.ln_max_cdf(x).exp();
        let mut acc = NeumaierSum::new();
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc.add(w * g(i as f64 * h));
        }
        acc.value() * h / 3.0
    }
}

fn bisect_decreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Summation threshold: `tau` with `sum_i Pr[X_i >= tau] = q`.
pub fn xi_threshold(inst: &Instance, q: f64) -> Result<f64> {
    let n = inst.len() as f64;
    if !(q > 0.0 && q <= n) {
        return Err(domain(format!("rate q must lie in (0, {n}], got {q}")));
    }
    inst.require_continuous()?;
    Ok(bisect_decreasing(|t| inst.survival_sum(t), q, 0.0, inst.support_hi()))
}

/// Maximum-quantile threshold: `tau` with `Pr[max_i X_i <= tau] = alpha`.
pub fn max_quantile_threshold(inst: &Instance, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    inst.require_continuous()?;
    let target = alpha.ln();
    // ln prod F is increasing, so bisect its negation
    Ok(bisect_decreasing(|t| -inst.ln_max_cdf(t), -target, 0.0, inst.support_hi()))
}

/// Summation threshold on the instance split into `shards` pieces per member,
/// each with CDF `F^(1/K)`. `None` takes the limit of infinitely many shards.
pub fn sharded_xi_threshold(inst: &Instance, q: f64, shards: Option<u64>) -> Result<f64> {
    if !(q > 0.0) {
        return Err(domain(format!("rate q must be positive, got {q}")));
    }
    inst.require_continuous()?;
    let rate = |t: f64| -> f64 {
        let mut acc = NeumaierSum::new();
        let per = |m: &Distribution| {
            let lf = m.cdf(t).ln();
            match shards {
                Some(k) => -(k as f64) * (lf / k as f64).exp_m1(),
                None => -lf,
            }
        };
        if inst.is_iid() {
            return inst.len() as f64 * per(&inst.members()[0]);
        }
        for m in inst.members() {
            acc.add(per(m));
        }
        acc.value()
    };
    Ok(bisect_decreasing(rate, q, 0.0, inst.support_hi()))
}

/// One value and one independent uniform arrival time per member, sorted by time.
pub fn sample_arrivals_with<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Vec<Arrival> {
    let mut out: Vec<Arrival> = inst
        .members()
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let value = d.sample(rng);
            let time = rng.gen::<f64>();
            Arrival { index, value, time }
        })
        .collect();
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    out
}

pub fn sample_arrivals(inst: &Instance, seed: u64) -> Vec<Arrival> {
    sample_arrivals_with(inst, &mut trial_rng(seed, 0))
}

/// The simulated arrival process: members come in uniformly random order and
/// the `j`-th one processed is stamped with the `j`-th smallest of `n`
/// uniform times, drawn directly as normalized exponential spacings.
/// IID instances skip the shuffle since their members are exchangeable.
pub fn simulated_arrivals_with<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Vec<Arrival> {
    let n = inst.len();
    let mut order: Vec<usize> = (0..n).collect();
    if !inst.is_iid() {
        order.shuffle(rng);
    }
    let mut times = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += rng.sample::<f64, _>(Exp1);
        times.push(acc);
    }
    let total = acc + rng.sample::<f64, _>(Exp1);
    order
        .into_iter()
        .zip(times)
        .map(|(index, t)| Arrival { index, value: inst.members()[index].sample(rng), time: t / total })
        .collect()
}

/// Random order with deterministic times: the `j`-th member processed
/// (from 1) arrives at `(j - 1/2) / n`, so a step schedule with `n` steps
/// applies step `j` to it.
pub fn positional_arrivals_with<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Vec<Arrival> {
    let n = inst.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
        .into_iter()
        .enumerate()
        .map(|(j, index)| Arrival {
            index,
            value: inst.members()[index].sample(rng),
            time: (j as f64 + 0.5) / n as f64,
        })
        .collect()
}
