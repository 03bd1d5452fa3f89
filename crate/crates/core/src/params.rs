//! Parameter files. The published parameter sets ship under `data/` and are
//! embedded here so tests and the CLI read the same bytes.

use serde::{Deserialize, Serialize};

use crate::bounds::{QuantileSchedule, RateSchedule};
use crate::error::{validation, Result};
use crate::hardness::HardnessParams;
use crate::semionline::{RateMatrix, RateMatrixSpec};

pub const SCHEMA_VERSION: u32 = 1;

pub const IID_CURVE: &str = include_str!("../data/iid_curve.json");
pub const SECRETARY_BLIND: &str = include_str!("../data/secretary_blind.json");
pub const SEMIONLINE: &str = include_str!("../data/semionline.json");
pub const TOP1OF2_CURVE: &str = include_str!("../data/top1of2_curve.json");
pub const TWO_THRESHOLD: &str = include_str!("../data/two_threshold.json");
pub const THREE_THRESHOLD: &str = include_str!("../data/three_threshold.json");
pub const HARDNESS: &str = include_str!("../data/hardness.json");

fn check_version(v: Option<u32>) -> Result<()> {
    match v {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(validation(format!("unsupported schema_version {other}"))),
    }
}

/// `{cs: [...]}`; a leading `0` anchor is accepted and dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub family: Option<String>,
    pub cs: Vec<f64>,
}

impl CurveParams {
    pub fn schedule(&self) -> Result<RateSchedule> {
        check_version(self.schema_version)?;
        RateSchedule::from_listing(&self.cs)
    }
}

/// `{alphas: [1, ..., 0]}` including both pinned endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileParams {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub family: Option<String>,
    pub alphas: Vec<f64>,
}

impl QuantileParams {
    pub fn schedule(&self) -> Result<QuantileSchedule> {
        check_version(self.schema_version)?;
        QuantileSchedule::new(self.alphas.clone())
    }
}

/// `{c: [c1, c2, ...]}` for the non-IID multi-threshold bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdParams {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub family: Option<String>,
    pub c: Vec<f64>,
}

impl ThresholdParams {
    pub fn rates(&self, count: usize) -> Result<Vec<f64>> {
        check_version(self.schema_version)?;
        if self.c.len() != count {
            return Err(validation(format!("expected {count} rates, got {}", self.c.len())));
        }
        Ok(self.c.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrixParams {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(flatten)]
    pub spec: RateMatrixSpec,
}

impl RateMatrixParams {
    pub fn matrix(&self) -> Result<RateMatrix> {
        check_version(self.schema_version)?;
        self.spec.build()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessFile {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(flatten)]
    pub params: HardnessParams,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| validation(format!("parameter file: {e}")))
}

pub fn parse_curve(text: &str) -> Result<RateSchedule> {
    parse::<CurveParams>(text)?.schedule()
}

pub fn parse_quantiles(text: &str) -> Result<QuantileSchedule> {
    parse::<QuantileParams>(text)?.schedule()
}

pub fn parse_thresholds(text: &str, count: usize) -> Result<Vec<f64>> {
    parse::<ThresholdParams>(text)?.rates(count)
}

pub fn parse_rate_matrix(text: &str) -> Result<RateMatrix> {
    parse::<RateMatrixParams>(text)?.matrix()
}

pub fn parse_hardness(text: &str) -> Result<HardnessParams> {
    let f = parse::<HardnessFile>(text)?;
    check_version(f.schema_version)?;
    Ok(f.params)
}

pub fn iid_curve() -> RateSchedule {
    parse_curve(IID_CURVE).expect("bundled parameter file parses")
}

pub fn secretary_blind() -> QuantileSchedule {
    parse_quantiles(SECRETARY_BLIND).expect("bundled parameter file parses")
}

pub fn semionline() -> RateMatrix {
    parse_rate_matrix(SEMIONLINE).expect("bundled parameter file parses")
}

pub fn top1of2_curve() -> RateSchedule {
    parse_curve(TOP1OF2_CURVE).expect("bundled parameter file parses")
}

pub fn two_threshold() -> (f64, f64) {
    let c = parse_thresholds(TWO_THRESHOLD, 2).expect("bundled parameter file parses");
    (c[0], c[1])
}

pub fn three_threshold() -> (f64, f64, f64) {
    let c = parse_thresholds(THREE_THRESHOLD, 3).expect("bundled parameter file parses");
    (c[0], c[1], c[2])
}

pub fn hardness() -> HardnessParams {
    parse_hardness(HARDNESS).expect("bundled parameter file parses")
}
