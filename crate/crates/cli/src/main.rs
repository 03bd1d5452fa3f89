//! `prophet`: verify, optimize and simulate threshold strategies, evaluate the
//! Top-1-of-2 hardness instance, and tabulate run artifacts.
//!
//! Exit codes: 0 success, 1 a claim failed, 2 usage or configuration error.

mod artifact;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use artifact::{input_hash, Artifact};
use prophet_core::bounds::{
    iid_curve_bound, secretary_blind_bound, top1of2_iid_mthreshold_bound, top1of2_three_threshold_bound,
    two_threshold_report, BoundReport, EvalOptions, GridOptions,
};
use prophet_core::distributions::Instance;
use prophet_core::hardness::{hardness_expected_values, hardness_limit_ratios};
use prophet_core::optimizer::{append_ledger, optimize, SearchSpec};
use prophet_core::params;
use prophet_core::semionline::{semionline_verify, VerifyOptions, DEFAULT_EPS};
use prophet_core::simulator::{optimal_dp_discrete, SimulationSpec, StrategySpec, ThresholdSpec};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "PROPHET_THREADS";

#[derive(Parser)]
#[command(name = "prophet", version, about = "Competitive-ratio verification and simulation for threshold strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a parameter set against a target ratio.
    Verify {
        #[arg(long, value_enum)]
        family: VerifyFamily,
        /// Parameter file; the bundled set for the family when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Ratio to certify; defaults to the computed ratio rounded down to 9 decimals.
        #[arg(long)]
        target: Option<f64>,
        /// Grid points per segment.
        #[arg(long, default_value_t = prophet_core::bounds::DEFAULT_GRID_POINTS)]
        grid: usize,
        /// Level grid step for the semi-online verifier.
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Also bound the semi-online defect between grid nodes.
        #[arg(long)]
        interval: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for better parameters, then certify the winner.
    Optimize {
        /// Search specification JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Starting parameter file in the family's schema.
        #[arg(long, conflicts_with = "initial")]
        params: Option<PathBuf>,
        /// Starting vector as comma-separated numbers.
        #[arg(long, value_delimiter = ',')]
        initial: Option<Vec<f64>>,
        /// CSV file to append the result to.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate an empirical competitive ratio by Monte Carlo.
    Simulate {
        /// Simulation JSON `{instance, strategy, trials, seed}`.
        #[arg(long, conflicts_with = "strategy")]
        spec: Option<PathBuf>,
        /// Built-in strategy on an IID uniform instance.
        #[arg(long, value_enum)]
        strategy: Option<Preset>,
        /// Parameter file for presets that take one; bundled set when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Instance size for presets.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Family label for the report; derived from the strategy when omitted.
        #[arg(long)]
        family: Option<String>,
        /// Exit 1 if the empirical ratio falls below this value.
        #[arg(long)]
        min_ratio: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-1-of-2 hardness instance: the six limit ratios and their maximum.
    Hardness {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also evaluate at this concrete beta, with the exact DP value.
        #[arg(long)]
        beta: Option<f64>,
        /// Exit 1 unless the maximum limit ratio is strictly below this value.
        #[arg(long)]
        below: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the artifacts in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Markdown output; stdout when omitted.
        #[arg(long)]
        out_md: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyFamily {
    SecretaryBlind,
    IidCurve,
    Top1of2Mthreshold,
    TwoThreshold,
    ThreeThreshold,
    Semionline,
}

impl VerifyFamily {
    fn name(&self) -> &'static str {
        match self {
            VerifyFamily::SecretaryBlind => "secretary_blind",
            VerifyFamily::IidCurve => "iid_curve",
            VerifyFamily::Top1of2Mthreshold => "top1of2_mthreshold",
            VerifyFamily::TwoThreshold => "top1of2_two_threshold",
            VerifyFamily::ThreeThreshold => "top1of2_three_threshold",
            VerifyFamily::Semionline => "semionline",
        }
    }

    fn bundled(&self) -> &'static str {
        match self {
            VerifyFamily::SecretaryBlind => params::SECRETARY_BLIND,
            VerifyFamily::IidCurve => params::IID_CURVE,
            VerifyFamily::Top1of2Mthreshold => params::TOP1OF2_CURVE,
            VerifyFamily::TwoThreshold => params::TWO_THRESHOLD,
            VerifyFamily::ThreeThreshold => params::THREE_THRESHOLD,
            VerifyFamily::Semionline => params::SEMIONLINE,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    SamuelCahn,
    /// Single threshold at the 1/e quantile of the maximum.
    Secretary,
    SecretaryBlind,
    IidCurve,
    Top1of2Curve,
    TwoThreshold,
    ThreeThreshold,
    Semionline,
    Loadmin,
}

enum Failure {
    Usage(String),
    Claim(String),
}

type CliResult<T> = Result<T, Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// File contents, or the bundled text when no path is given.
fn params_text(path: Option<&Path>, bundled: &str) -> CliResult<String> {
    match path {
        Some(p) => read_input(p),
        None => Ok(bundled.to_string()),
    }
}

fn emit(art: &Artifact, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(art).map_err(usage)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn floor9(x: f64) -> f64 {
    (x * 1e9).floor() / 1e9
}

fn run_verify(
    family: VerifyFamily,
    params_path: Option<&Path>,
    target: Option<f64>,
    grid: usize,
    eps: f64,
    interval: bool,
) -> CliResult<(BoundReport, String)> {
    let text = params_text(params_path, family.bundled())?;
    let hash = input_hash(&[family.name().as_bytes(), text.as_bytes()]);
    if grid < 2 {
        return Err(Failure::Usage("grid needs at least 2 points".into()));
    }
    let opts = EvalOptions { grid: GridOptions::with_points(grid), target, ..EvalOptions::default() };
    let report = match family {
        VerifyFamily::SecretaryBlind => secretary_blind_bound(&params::parse_quantiles(&text).map_err(usage)?, &opts),
        VerifyFamily::IidCurve => iid_curve_bound(&params::parse_curve(&text).map_err(usage)?, &opts),
        VerifyFamily::Top1of2Mthreshold => {
            top1of2_iid_mthreshold_bound(&params::parse_curve(&text).map_err(usage)?, &opts)
        }
        VerifyFamily::TwoThreshold => {
            let c = params::parse_thresholds(&text, 2).map_err(usage)?;
            two_threshold_report(c[0], c[1], &opts)
        }
        VerifyFamily::ThreeThreshold => {
            let c = params::parse_thresholds(&text, 3).map_err(usage)?;
            top1of2_three_threshold_bound(c[0], c[1], c[2], &opts).map(|b| b.report)
        }
        VerifyFamily::Semionline => {
            let c = params::parse_rate_matrix(&text).map_err(usage)?;
            let vopts = VerifyOptions { derivatives: interval };
            let target = match target {
                Some(t) => t,
                None => floor9(semionline_verify(&c, 0.0, eps, VerifyOptions::default()).map_err(usage)?.ratio),
            };
            semionline_verify(&c, target, eps, vopts)
        }
    }
    .map_err(usage)?;
    Ok((report, hash))
}

fn preset_spec(preset: Preset, params_path: Option<&Path>, n: Option<usize>) -> CliResult<(StrategySpec, usize, &'static str)> {
    let bundled_curve = |b: &str| -> CliResult<Vec<f64>> {
        let text = params_text(params_path, b)?;
        Ok(params::parse_curve(&text).map_err(usage)?.steps().to_vec())
    };
    let rates = |b: &str, count: usize| -> CliResult<Vec<f64>> {
        params::parse_thresholds(&params_text(params_path, b)?, count).map_err(usage)
    };
    Ok(match preset {
        Preset::SamuelCahn => (StrategySpec::SamuelCahn, n.unwrap_or(2000), "samuel_cahn"),
        Preset::Secretary => (
            StrategySpec::SingleThreshold { threshold: ThresholdSpec::Alpha((-1.0f64).exp()) },
            n.unwrap_or(2000),
            "single_threshold",
        ),
        Preset::SecretaryBlind => {
            let sched = params::parse_quantiles(&params_text(params_path, params::SECRETARY_BLIND)?).map_err(usage)?;
            (StrategySpec::BlindQuantile { alphas: sched.interior().to_vec() }, n.unwrap_or(2000), "secretary_blind")
        }
        Preset::IidCurve => (StrategySpec::RateCurve { cs: bundled_curve(params::IID_CURVE)? }, n.unwrap_or(2000), "iid_curve"),
        Preset::Top1of2Curve => (
            StrategySpec::Top1of2Curve { cs: bundled_curve(params::TOP1OF2_CURVE)? },
            n.unwrap_or(2000),
            "top1of2_mthreshold",
        ),
        Preset::TwoThreshold => (
            StrategySpec::Top1ofkFixed { rates: rates(params::TWO_THRESHOLD, 2)?, slots: 2 },
            n.unwrap_or(2000),
            "top1of2_two_threshold",
        ),
        Preset::ThreeThreshold => (
            StrategySpec::Top1ofkFixed { rates: rates(params::THREE_THRESHOLD, 3)?, slots: 2 },
            n.unwrap_or(2000),
            "top1of2_three_threshold",
        ),
        Preset::Semionline => {
            let text = params_text(params_path, params::SEMIONLINE)?;
            let p: params::RateMatrixParams = serde_json::from_str(&text).map_err(usage)?;
            (StrategySpec::SemionlineClock { matrix: p.spec }, n.unwrap_or(4000), "semionline")
        }
        Preset::Loadmin => (StrategySpec::LoadMin { c: prophet_core::simulator::DEFAULT_LOADMIN_C }, n.unwrap_or(10_000), "loadmin"),
    })
}

fn spec_family(s: &StrategySpec) -> &'static str {
    match s {
        StrategySpec::SingleThreshold { .. } => "single_threshold",
        StrategySpec::SamuelCahn => "samuel_cahn",
        StrategySpec::RateCurve { .. } => "iid_curve",
        StrategySpec::BlindQuantile { .. } => "secretary_blind",
        StrategySpec::Top1ofkFixed { .. } => "top1ofk_fixed",
        StrategySpec::Top1ofkRaise { .. } => "top1ofk_raise",
        StrategySpec::Top1of2Curve { .. } => "top1of2_mthreshold",
        StrategySpec::SemionlineClock { .. } => "semionline",
        StrategySpec::LoadMin { .. } => "loadmin",
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Verify { family, params, target, grid, eps, interval, out } => {
            let (report, hash) = run_verify(family, params.as_deref(), target, grid, eps, interval)?;
            let art = Artifact::new("verify", family.name(), hash, None, &report);
            emit(&art, out.as_deref())?;
            if report.certified {
                eprintln!("certified {} >= {}", family.name(), report.target);
                Ok(())
            } else {
                Err(Failure::Claim(format!(
                    "target {} not certified: defect {:e} at segment {} level {:?}",
                    report.target, report.defect_min, report.witness.segment, report.witness.value
                )))
            }
        }
        Command::Optimize { spec, params: params_path, initial, ledger, out } => {
            let spec_text = read_input(&spec)?;
            let search: SearchSpec = serde_json::from_str(&spec_text).map_err(usage)?;
            let (start, start_bytes): (Vec<f64>, Vec<u8>) = match (params_path, initial) {
                (_, Some(v)) => (v.clone(), format!("{v:?}").into_bytes()),
                (p, None) => {
                    use prophet_core::optimizer::Family as F;
                    let bundled = match search.family {
                        F::SecretaryBlind => Some(params::SECRETARY_BLIND),
                        F::IidCurve => Some(params::IID_CURVE),
                        F::Top1of2Mthreshold => Some(params::TOP1OF2_CURVE),
                        F::Top1of2TwoThreshold => Some(params::TWO_THRESHOLD),
                        F::Top1of2ThreeThreshold => Some(params::THREE_THRESHOLD),
                        F::SingleThreshold => None,
                    };
                    let text = match (p.as_deref(), bundled) {
                        (Some(p), _) => read_input(p)?,
                        (None, Some(b)) => b.to_string(),
                        (None, None) => return Err(Failure::Usage("this family needs --initial or --params".into())),
                    };
                    let v = match search.family {
                        F::SecretaryBlind => params::parse_quantiles(&text).map_err(usage)?.interior().to_vec(),
                        F::IidCurve | F::Top1of2Mthreshold => params::parse_curve(&text).map_err(usage)?.steps().to_vec(),
                        F::Top1of2TwoThreshold => params::parse_thresholds(&text, 2).map_err(usage)?,
                        F::Top1of2ThreeThreshold => params::parse_thresholds(&text, 3).map_err(usage)?,
                        F::SingleThreshold => params::parse_thresholds(&text, 1).map_err(usage)?,
                    };
                    (v, text.into_bytes())
                }
            };
            let result = optimize(&search, &start).map_err(usage)?;
            if let Some(l) = ledger {
                append_ledger(&l, &result).map_err(usage)?;
            }
            let hash = input_hash(&[spec_text.as_bytes(), &start_bytes]);
            let art = Artifact::new("optimize", result.family.name(), hash, Some(search.seed), &result);
            emit(&art, out.as_deref())?;
            eprintln!("{}: ratio {} (input {})", result.family.name(), result.report.ratio, result.input_ratio);
            Ok(())
        }
        Command::Simulate { spec, strategy, params, n, trials, seed, family, min_ratio, out } => {
            let (sim, hash, derived) = match (spec, strategy) {
                (Some(path), _) => {
                    let text = read_input(&path)?;
                    let sim: SimulationSpec = serde_json::from_str(&text).map_err(usage)?;
                    let fam = spec_family(&sim.strategy);
                    (sim, input_hash(&[text.as_bytes()]), fam)
                }
                (None, Some(p)) => {
                    let (strategy, n, fam) = preset_spec(p, params.as_deref(), n)?;
                    if n == 0 {
                        return Err(Failure::Usage("n must be at least 1".into()));
                    }
                    let sim = SimulationSpec { instance: Instance::iid_uniform(n), strategy, trials, seed };
                    let canon = serde_json::to_string(&sim).map_err(usage)?;
                    (sim, input_hash(&[canon.as_bytes()]), fam)
                }
                (None, None) => return Err(Failure::Usage("simulate needs --spec or --strategy".into())),
            };
            let result = sim.run().map_err(usage)?;
            let fam = family.unwrap_or_else(|| derived.to_string());
            let art = Artifact::new("simulate", &fam, hash, Some(sim.seed), &result);
            emit(&art, out.as_deref())?;
            eprintln!("{fam}: empirical ratio {} +/- {}", result.empirical_ratio, result.half_width);
            match min_ratio {
                Some(m) if result.empirical_ratio < m => {
                    Err(Failure::Claim(format!("empirical ratio {} below {m}", result.empirical_ratio)))
                }
                _ => Ok(()),
            }
        }
        Command::Hardness { params: path, beta, below, out } => {
            let text = params_text(path.as_deref(), params::HARDNESS)?;
            let hp = params::parse_hardness(&text).map_err(usage)?;
            let limits = hardness_limit_ratios(&hp).map_err(usage)?;
            let max = limits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let finite = match beta {
                Some(b) => {
                    let v = hardness_expected_values(&hp, b).map_err(usage)?;
                    let dp = optimal_dp_discrete(&hp.instance(b).map_err(usage)?, 2).map_err(usage)?;
                    Some(serde_json::json!({
                        "beta": b,
                        "ratios": v.ratios(),
                        "max_ratio": v.best() / v.prophet,
                        "expected": v.algorithms,
                        "prophet": v.prophet,
                        "dp_value": dp,
                    }))
                }
                None => None,
            };
            let result = serde_json::json!({ "params": hp, "limit_ratios": limits, "max_limit_ratio": max, "finite": finite });
            let hash = input_hash(&[text.as_bytes(), format!("{beta:?}").as_bytes()]);
            emit(&Artifact::new("hardness", "hardness", hash, None, &result), out.as_deref())?;
            for (i, a) in limits.iter().enumerate() {
                eprintln!("alpha_{} = {a:.8}", i + 1);
            }
            eprintln!("max = {max:.8}");
            match below {
                Some(b) if max >= b => Err(Failure::Claim(format!("maximum limit ratio {max} is not below {b}"))),
                _ => Ok(()),
            }
        }
        Command::Report { dir, out_md, out_csv } => {
            let table = report::build(&dir).map_err(Failure::Usage)?;
            match out_md {
                Some(p) => std::fs::write(&p, &table.markdown).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
                None => print!("{}", table.markdown),
            }
            if let Some(p) = out_csv {
                std::fs::write(&p, &table.csv).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            }
            if table.missing.is_empty() {
                Ok(())
            } else {
                Err(Failure::Claim(format!("missing artifacts for: {}", table.missing.join(", "))))
            }
        }
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Failure::Usage(format!("{THREADS_ENV} must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Claim(m)) => {
            eprintln!("claim failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
