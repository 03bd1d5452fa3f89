use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Step rates `c_1..c_m`: the expected number of realizations above the
/// threshold while block `i` is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    steps: Vec<f64>,
}

impl RateSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(validation("rate schedule needs at least one step"));
        }
        if let Some(c) = steps.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(validation(format!("rates must be positive and finite, got {c}")));
        }
        Ok(Self { steps })
    }

    /// Accepts listings that start with the pinned anchor `c_0 = 0`.
    pub fn from_listing(values: &[f64]) -> Result<Self> {
        match values.split_first() {
            Some((&first, rest)) if first == 0.0 => Self::new(rest.to_vec()),
            _ => Self::new(values.to_vec()),
        }
    }

    pub fn ascending(steps: Vec<f64>) -> Result<Self> {
        let s = Self::new(steps)?;
        s.require_ascending()?;
        Ok(s)
    }

    /// Equal neighbours are allowed.
    pub fn require_ascending(&self) -> Result<()> {
        match self.steps.windows(2).position(|w| w[1] < w[0]) {
            Some(i) => Err(validation(format!(
                "rates must be non-decreasing, step {} ({}) exceeds step {} ({})",
                i + 1,
                self.steps[i],
                i + 2,
                self.steps[i + 1]
            ))),
            None => Ok(()),
        }
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn m(&self) -> usize {
        self.steps.len()
    }
}

/// Maximum-quantiles `1 = a_0 > a_1 > ... > a_m > a_{m+1} = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSchedule {
    alphas: Vec<f64>,
}

impl QuantileSchedule {
    /// Full listing including both pinned endpoints.
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 3 {
            return Err(validation("quantile schedule needs at least one interior value"));
        }
        if alphas[0] != 1.0 || *alphas.last().unwrap() != 0.0 {
            return Err(validation("quantile schedule must start at 1 and end at 0"));
        }
        if let Some(i) = alphas.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(validation(format!("quantiles must strictly decrease (index {} to {})", i, i + 1)));
        }
        Ok(Self { alphas })
    }

    /// Interior values only; the endpoints are added.
    pub fn from_interior(interior: &[f64]) -> Result<Self> {
        let mut a = Vec::with_capacity(interior.len() + 2);
        a.push(1.0);
        a.extend_from_slice(interior);
        a.push(0.0);
        Self::new(a)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn interior(&self) -> &[f64] {
        &self.alphas[1..self.alphas.len() - 1]
    }

    pub fn m(&self) -> usize {
        self.alphas.len() - 2
    }
}
