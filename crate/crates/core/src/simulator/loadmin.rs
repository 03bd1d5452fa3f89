//! Semi-online load minimization: discard a few members at random, narrow the
//! rest with iterated summation thresholds, and finish with a pairwise
//! median-query tournament.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{xi_threshold, Distribution, Instance};
use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Constant `c` in the thresholds `Xi(c log^(t) n)`.
pub const DEFAULT_LOADMIN_C: f64 = 2.0;
/// Rounds per pairwise comparison before the champion is kept by default.
pub const TOURNAMENT_CAP: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadMinResult {
    pub value: f64,
    pub true_max: f64,
    pub max_load: u32,
    pub queries: u64,
    pub success: bool,
}

/// Rates `c log^(t) n` for `t = 1, 2, ...` while the iterated log stays positive.
pub fn loadmin_levels(n: usize, c: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut lg = (n as f64).ln();
    while lg > 0.0 {
        out.push(c * lg);
        lg = lg.ln();
    }
    out
}

/// Number of members discarded up front: `ceil(sqrt n)`, keeping at least one.
pub fn discard_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).min(n.saturating_sub(1))
}

/// Thresholds for one instance; cached when every survivor set looks alike.
#[derive(Debug, Clone)]
pub struct LoadMinPlan {
    c: f64,
    cached: Option<Vec<f64>>,
}

impl LoadMinPlan {
    pub fn new(inst: &Instance, c: f64) -> Result<Self> {
        if let Some(m) = inst.members().iter().find(|m| !m.is_continuous()) {
            return Err(Error::Unsupported(format!("median queries need continuous members, got {m:?}")));
        }
        let n = inst.len();
        let cached = if inst.is_iid() && n > 1 {
            let surv = Instance::iid(inst.members()[0], n - discard_count(n))?;
            Some(thresholds(&surv, n, c)?)
        } else {
            None
        };
        Ok(Self { c, cached })
    }

    fn levels(&self, inst: &Instance, survivors: &[usize]) -> Vec<f64> {
        if let Some(t) = &self.cached {
            return t.clone();
        }
        let members: Vec<Distribution> = survivors.iter().map(|&i| inst.members()[i]).collect();
        let surv = Instance::new(members, false).expect("members already validated");
        thresholds(&surv, inst.len(), self.c).expect("continuous members")
    }
}

fn thresholds(surv: &Instance, n: usize, c: f64) -> Result<Vec<f64>> {
    let cap = surv.len() as f64;
    loadmin_levels(n, c).into_iter().filter(|q| *q <= cap).map(|q| xi_threshold(surv, q)).collect()
}

struct Query<'a> {
    inst: &'a Instance,
    values: &'a [f64],
    lo: Vec<f64>,
    hi: Vec<f64>,
    load: Vec<u32>,
    queries: u64,
}

impl Query<'_> {
    fn ask(&mut self, i: usize, tau: f64) -> bool {
        self.load[i] += 1;
        self.queries += 1;
        let yes = self.values[i] >= tau;
        if yes {
            self.lo[i] = self.lo[i].max(tau);
        } else {
            self.hi[i] = self.hi[i].min(tau);
        }
        yes
    }

    fn median(&self, i: usize) -> f64 {
        self.inst.members()[i].conditional_median(self.lo[i], self.hi[i]).expect("realization lies in its interval")
    }

    /// Sequential champion-versus-challenger elimination.
    fn tournament(&mut self, cands: &[usize]) -> usize {
        let mut champ = cands[0];
        for &ch in &cands[1..] {
            for _ in 0..TOURNAMENT_CAP {
                let tau = self.median(champ);
                let a = self.ask(champ, tau);
                let b = self.ask(ch, tau);
                if a != b {
                    if b {
                        champ = ch;
                    }
                    break;
                }
            }
        }
        champ
    }
}

pub(crate) fn loadmin_trial<R: Rng + ?Sized>(inst: &Instance, plan: &LoadMinPlan, rng: &mut R) -> LoadMinResult {
    let n = inst.len();
    let values: Vec<f64> = inst.members().iter().map(|d| d.sample(rng)).collect();
    let true_max = values.iter().copied().fold(0.0, f64::max);
    if n == 1 {
        return LoadMinResult { value: values[0], true_max, max_load: 1, queries: 1, success: true };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let survivors = &order[discard_count(n)..];
    let levels = plan.levels(inst, survivors);

    let mut q = Query {
        inst,
        values: &values,
        lo: vec![0.0; n],
        hi: vec![f64::INFINITY; n],
        load: vec![0; n],
        queries: 0,
    };
    let mut cands: Vec<usize> = survivors.to_vec();
    for &tau in &levels {
        if cands.len() <= 1 {
            break;
        }
        let yes: Vec<usize> = cands.iter().copied().filter(|&i| q.ask(i, tau)).collect();
        if yes.is_empty() {
            break;
        }
        cands = yes;
    }
    let winner = q.tournament(&cands);
    let value = values[winner];
    LoadMinResult {
        value,
        true_max,
        max_load: q.load.iter().copied().max().unwrap_or(0),
        queries: q.queries,
        success: value == true_max,
    }
}

/// One run of the load-minimization pipeline on a fresh realization.
pub fn loadmin_run(inst: &Instance, c: f64, seed: u64) -> Result<LoadMinResult> {
    let plan = LoadMinPlan::new(inst, c)?;
    Ok(loadmin_trial(inst, &plan, &mut trial_rng(seed, 0)))
}
