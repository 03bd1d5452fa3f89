//! Consolidated table over a directory of run artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::artifact::Artifact;

/// Bound families every complete run is expected to cover, in table order,
/// with their problem and bound labels.
pub const EXPECTED: [(&str, &str, &str); 6] = [
    ("secretary_blind", "prophet secretary", "blind quantile schedule"),
    ("iid_curve", "IID prophet inequality", "step curve"),
    ("top1of2_two_threshold", "Top-1-of-2", "two thresholds"),
    ("top1of2_three_threshold", "Top-1-of-2", "three thresholds"),
    ("top1of2_mthreshold", "IID Top-1-of-2", "step curve"),
    ("semionline", "IID semi-online", "clocked thresholds"),
];

#[derive(Debug, Default, Clone)]
struct Row {
    ratio: Option<f64>,
    target: Option<f64>,
    certified: Option<bool>,
    empirical: Option<f64>,
    half_width: Option<f64>,
}

pub struct Table {
    pub markdown: String,
    pub csv: String,
    pub missing: Vec<String>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.7}")).unwrap_or_default()
}

pub fn build(dir: &Path) -> Result<Table, String> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();

    let mut rows: BTreeMap<String, Row> = BTreeMap::new();
    for p in &paths {
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        // files that are not artifacts are skipped
        let Ok(a) = serde_json::from_str::<Artifact>(&text) else { continue };
        let row = rows.entry(a.family.clone()).or_default();
        let num = |k: &str| a.result.get(k).and_then(|v| v.as_f64());
        match a.command.as_str() {
            "verify" => {
                row.ratio = num("ratio");
                row.target = num("target");
                row.certified = a.result.get("certified").and_then(|v| v.as_bool());
            }
            "simulate" => {
                row.empirical = num("empirical_ratio");
                row.half_width = num("half_width");
            }
            _ => {}
        }
    }

    let missing: Vec<String> = EXPECTED
        .iter()
        .filter(|(f, _, _)| rows.get(*f).map_or(true, |r| r.ratio.is_none()))
        .map(|(f, _, _)| f.to_string())
        .collect();

    let mut order: Vec<(String, String, String)> =
        EXPECTED.iter().map(|(f, p, b)| (f.to_string(), p.to_string(), b.to_string())).collect();
    for f in rows.keys() {
        if !EXPECTED.iter().any(|(e, _, _)| e == f) {
            order.push((f.clone(), String::new(), f.clone()));
        }
    }

    let mut md = String::from(
        "| problem | bound | family | certified ratio | target | certified | empirical ratio | 99% half-width |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    let mut csv = String::from("problem,bound,family,certified_ratio,target,certified,empirical_ratio,half_width\n");
    for (family, problem, bound) in &order {
        let Some(r) = rows.get(family) else { continue };
        let cert = r.certified.map(|c| if c { "yes" } else { "no" }).unwrap_or("");
        let _ = writeln!(
            md,
            "| {problem} | {bound} | {family} | {} | {} | {cert} | {} | {} |",
            cell(r.ratio),
            cell(r.target),
            cell(r.empirical),
            cell(r.half_width)
        );
        let _ = writeln!(
            csv,
            "{problem},{bound},{family},{},{},{cert},{},{}",
            cell(r.ratio),
            cell(r.target),
            cell(r.empirical),
            cell(r.half_width)
        );
    }
    Ok(Table { markdown: md, csv, missing })
}
