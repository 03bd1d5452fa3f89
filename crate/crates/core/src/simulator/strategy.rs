//! Concrete stopping rules and their JSON descriptions.

use serde::{Deserialize, Serialize};

use crate::bounds::zeta_default_rate;
use crate::distributions::{max_quantile_threshold, xi_threshold, Arrival, Instance};
use crate::error::{validation, Result};
use crate::semionline::RateMatrixSpec;

/// A stopping rule with every threshold resolved to a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Accept the first value at or above `tau`.
    SingleThreshold { tau: f64 },
    /// Accept the first value at or above `taus[ceil(t m) - 1]`.
    StepThreshold { taus: Vec<f64> },
    /// Up to `slots` acceptances. After accepting `v` the active index becomes
    /// the first `j` with `taus[j] > v`, or the last one if none is.
    Top1ofkFixed { taus: Vec<f64>, slots: usize },
    /// Accept anything strictly above the bar, then raise the bar to it.
    Top1ofkRaise { tau: f64, slots: usize },
    /// Accept the first value strictly above the step curve, then the first
    /// value strictly above that one.
    Top1of2Curve { taus: Vec<f64> },
    /// Clocked semi-online rule; `taus[j][i]` is function `j` in block `i`.
    SemionlineClock { taus: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Outcome {
    pub reward: f64,
    pub accepted: usize,
    /// Position in the arrival list (from 1) of the first acceptance.
    pub first_position: Option<usize>,
}

fn step_index(t: f64, m: usize) -> usize {
    ((t * m as f64).ceil() as usize).clamp(1, m) - 1
}

fn block_index(t: f64, m: usize) -> usize {
    ((t * m as f64).floor() as usize).min(m - 1)
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Strategy::SingleThreshold { tau } | Strategy::Top1ofkRaise { tau, .. } => !tau.is_nan(),
            Strategy::StepThreshold { taus } | Strategy::Top1of2Curve { taus } => {
                !taus.is_empty() && taus.iter().all(|t| !t.is_nan())
            }
            Strategy::Top1ofkFixed { taus, .. } => {
                !taus.is_empty() && taus.iter().all(|t| !t.is_nan()) && taus.windows(2).all(|w| w[0] >= w[1])
            }
            Strategy::SemionlineClock { taus } => {
                !taus.is_empty()
                    && !taus[0].is_empty()
                    && taus.iter().all(|r| r.len() == taus[0].len() && r.iter().all(|t| !t.is_nan()))
            }
        };
        let slots_ok = match self {
            Strategy::Top1ofkFixed { slots, .. } | Strategy::Top1ofkRaise { slots, .. } => *slots >= 1,
            _ => true,
        };
        if ok && slots_ok {
            Ok(())
        } else {
            Err(validation(format!("invalid strategy parameters {self:?}")))
        }
    }

    pub fn run(&self, arrivals: &[Arrival]) -> Outcome {
        let mut out = Outcome::default();
        let accept = |pos: usize, v: f64, out: &mut Outcome| {
            out.accepted += 1;
            out.first_position.get_or_insert(pos + 1);
            out.reward = out.reward.max(v);
        };
        match self {
            Strategy::SingleThreshold { tau } => {
                if let Some(pos) = arrivals.iter().position(|a| a.value >= *tau) {
                    accept(pos, arrivals[pos].value, &mut out);
                }
            }
            Strategy::StepThreshold { taus } => {
                let m = taus.len();
                if let Some(pos) = arrivals.iter().position(|a| a.value >= taus[step_index(a.time, m)]) {
                    accept(pos, arrivals[pos].value, &mut out);
                }
            }
            Strategy::Top1ofkFixed { taus, slots } => {
                let mut r = 0;
                for (pos, a) in arrivals.iter().enumerate() {
                    if a.value >= taus[r] {
                        accept(pos, a.value, &mut out);
                        if out.accepted == *slots {
                            break;
                        }
                        r = taus.iter().position(|t| *t > a.value).unwrap_or(taus.len() - 1);
                    }
                }
            }
            Strategy::Top1ofkRaise { tau, slots } => {
                let mut bar = *tau;
                for (pos, a) in arrivals.iter().enumerate() {
                    if a.value > bar {
                        accept(pos, a.value, &mut out);
                        if out.accepted == *slots {
                            break;
                        }
                        bar = a.value;
                    }
                }
            }
            Strategy::Top1of2Curve { taus } => {
                let m = taus.len();
                let mut first: Option<f64> = None;
                for (pos, a) in arrivals.iter().enumerate() {
                    let bar = first.unwrap_or_else(|| taus[step_index(a.time, m)]);
                    if a.value > bar {
                        accept(pos, a.value, &mut out);
                        if first.is_some() {
                            break;
                        }
                        first = Some(a.value);
                    }
                }
            }
            Strategy::SemionlineClock { taus } => {
                let k = taus.len();
                let m = taus[0].len();
                let mut r = 0;
                let mut clock = 0.0;
                let mut last = None;
                for (pos, a) in arrivals.iter().enumerate() {
                    if r >= k {
                        break;
                    }
                    if a.time >= clock && a.value >= taus[r][block_index(a.time, m)] {
                        r += 1;
                        out.accepted += 1;
                        out.first_position.get_or_insert(pos + 1);
                        last = Some(a.value);
                        clock = (a.time * m as f64).ceil() / m as f64;
                    }
                }
                // the reward is the last success, not the best one
                out.reward = last.unwrap_or(0.0);
            }
        }
        out
    }
}

/// Reward of `strategy` on time-ordered `arrivals`; zero if nothing is accepted.
pub fn run_strategy(strategy: &Strategy, arrivals: &[Arrival]) -> f64 {
    strategy.run(arrivals).reward
}

/// Threshold given as a value, a maximum-quantile or a summation rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSpec {
    Tau(f64),
    Alpha(f64),
    Rate(f64),
}

impl ThresholdSpec {
    pub fn resolve(&self, inst: &Instance) -> Result<f64> {
        match *self {
            ThresholdSpec::Tau(t) => Ok(t),
            ThresholdSpec::Alpha(a) => quantile_threshold(inst, a),
            ThresholdSpec::Rate(q) => xi_threshold(inst, q),
        }
    }
}

/// `max_quantile_threshold` extended to the closed interval: quantile 1 never
/// accepts and quantile 0 always does.
fn quantile_threshold(inst: &Instance, alpha: f64) -> Result<f64> {
    if alpha >= 1.0 {
        Ok(f64::INFINITY)
    } else if alpha <= 0.0 {
        Ok(f64::NEG_INFINITY)
    } else {
        max_quantile_threshold(inst, alpha)
    }
}

/// Strategy description resolved against an instance before simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    SingleThreshold { threshold: ThresholdSpec },
    /// Single threshold at the median of the maximum.
    SamuelCahn,
    /// Single-choice step curve `Xi(c_j)`.
    RateCurve { cs: Vec<f64> },
    /// Step `j` uses the `alphas[j-1]` quantile of the maximum.
    BlindQuantile { alphas: Vec<f64> },
    /// Thresholds with `Pr[Z <= tau_j] = e^{-c_j}`.
    Top1ofkFixed { rates: Vec<f64>, slots: usize },
    /// Initial bar `Xi(rate)`; defaults to the record fixed point for `slots`.
    Top1ofkRaise {
        #[serde(default)]
        rate: Option<f64>,
        slots: usize,
    },
    /// Step curve `Xi(c_j)`.
    Top1of2Curve { cs: Vec<f64> },
    SemionlineClock { matrix: RateMatrixSpec },
    LoadMin {
        #[serde(default = "default_loadmin_c")]
        c: f64,
    },
}

fn default_loadmin_c() -> f64 {
    super::loadmin::DEFAULT_LOADMIN_C
}

/// A strategy ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Online(Strategy),
    LoadMin { c: f64 },
}

impl StrategySpec {
    pub fn resolve(&self, inst: &Instance) -> Result<Resolved> {
        let s = match self {
            StrategySpec::SingleThreshold { threshold } => Strategy::SingleThreshold { tau: threshold.resolve(inst)? },
            StrategySpec::SamuelCahn => Strategy::SingleThreshold { tau: max_quantile_threshold(inst, 0.5)? },
            StrategySpec::RateCurve { cs } => {
                Strategy::StepThreshold { taus: cs.iter().map(|c| xi_threshold(inst, *c)).collect::<Result<_>>()? }
            }
            StrategySpec::BlindQuantile { alphas } => {
                if alphas.windows(2).any(|w| w[1] > w[0]) {
                    return Err(validation("blind quantiles must be non-increasing"));
                }
                Strategy::StepThreshold { taus: alphas.iter().map(|a| quantile_threshold(inst, *a)).collect::<Result<_>>()? }
            }
            StrategySpec::Top1ofkFixed { rates, slots } => Strategy::Top1ofkFixed {
                taus: rates.iter().map(|c| quantile_threshold(inst, (-c).exp())).collect::<Result<_>>()?,
                slots: *slots,
            },
            StrategySpec::Top1ofkRaise { rate, slots } => {
                let q = match rate {
                    Some(q) => *q,
                    None => zeta_default_rate(*slots)?,
                };
                Strategy::Top1ofkRaise { tau: xi_threshold(inst, q)?, slots: *slots }
            }
            StrategySpec::Top1of2Curve { cs } => {
                Strategy::Top1of2Curve { taus: cs.iter().map(|c| xi_threshold(inst, *c)).collect::<Result<_>>()? }
            }
            StrategySpec::SemionlineClock { matrix } => {
                let c = matrix.build()?;
                let mut cache: Vec<(f64, f64)> = Vec::new();
                for q in c.distinct_rates() {
                    cache.push((q, xi_threshold(inst, q)?));
                }
                let lookup = |q: f64| cache.iter().find(|(r, _)| *r == q).map(|(_, t)| *t).expect("rate cached");
                let taus = (0..c.k()).map(|j| c.row(j).iter().map(|q| lookup(*q)).collect()).collect();
                Strategy::SemionlineClock { taus }
            }
            StrategySpec::LoadMin { c } => {
                if !(*c > 0.0) {
                    return Err(validation(format!("load-min constant must be positive, got {c}")));
                }
                return Ok(Resolved::LoadMin { c: *c });
            }
        };
        s.validate()?;
        Ok(Resolved::Online(s))
    }
}
