//! Command-line front end: experiment configs, JSON reports and replay.
//!
//! Every run produces `{config, result, meta}`. `result` holds only values
//! that are a function of the config and the input files, so a replay can
//! compare it byte for byte; timings live in `meta`.

use crate::bench::{build_majority, reports_to_csv, sweep, verify_majority, BoundReport, SweepConfig};
use crate::dissociation::{check_family, FamilySpec, FamilyStatus, DEFAULT_BUDGET};
use crate::energy::{energy, EnergyMethod};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_str};
use crate::f2n::{read_set, write_set, F2Set};
use crate::inverse::{extract_rectangles_d, extract_rectangles_pair, plant, plant_prefixed, InverseParams};
use crate::permanent::{exhaustive_per_zero, fk_zero_test, permanent, reduced_permanent_check, verify_certificate, CombMatrix};
use crate::spectrum::{large_spectrum_of, spectrum_of_set};
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "F2COMB_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One CLI invocation in replayable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub command: Command,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Energy {
        set: PathBuf,
        k: usize,
        method: String,
    },
    Spectrum {
        set: PathBuf,
        #[serde(default, with = "crate::exact::opt_rational_str")]
        alpha: Option<BigRational>,
    },
    Dissociate {
        check: PathBuf,
        k: usize,
        #[serde(default)]
        r: Option<PathBuf>,
    },
    Permanent {
        matrix: PathBuf,
    },
    FkTest {
        matrix: PathBuf,
    },
    LemmaPer0 {
        #[serde(default)]
        matrix: Option<PathBuf>,
        #[serde(default)]
        exhaustive: Option<(usize, usize)>,
    },
    Bench {
        theorem: String,
        #[serde(default)]
        sweep: Option<SweepConfig>,
        #[serde(default)]
        n: Option<u32>,
        #[serde(default, with = "crate::exact::opt_rational_str")]
        delta: Option<BigRational>,
        #[serde(default)]
        d: Option<usize>,
    },
    Extract {
        q: PathBuf,
        lambda: PathBuf,
        d: usize,
        params: InverseParams,
    },
    Plant {
        h: usize,
        lsize: usize,
        lpsize: usize,
        lambda_size: usize,
        #[serde(with = "rational_str")]
        noise: BigRational,
        d: usize,
        #[serde(default)]
        q_out: Option<PathBuf>,
        #[serde(default)]
        lambda_out: Option<PathBuf>,
    },
}

/// Overall verdict, mapped to the exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Undecided,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Violated => 1,
            Verdict::Undecided => 2,
        }
    }
}

/// Exit status for an error: broken invariants and replay mismatches count
/// as violations, everything else as a precondition failure.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) | Error::Mismatch(_) => 1,
        _ => 2,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub result: Value,
    pub meta: Value,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub verdict: Verdict,
    /// Tabular output for `--format csv`.
    pub csv: Option<String>,
}

fn from_holds(ok: bool) -> Verdict {
    if ok {
        Verdict::Holds
    } else {
        Verdict::Violated
    }
}

fn bench_verdict(rows: &[BoundReport], skipped: usize) -> Verdict {
    if rows.iter().any(|r| !r.holds) {
        Verdict::Violated
    } else if skipped > 0 {
        Verdict::Undecided
    } else {
        Verdict::Holds
    }
}

fn read_matrix(path: &Path) -> Result<CombMatrix> {
    CombMatrix::parse(&std::fs::read_to_string(path)?)
}

fn parse_method(m: &str) -> Result<Vec<EnergyMethod>> {
    Ok(match m {
        "brute" | "bruteforce" => vec![EnergyMethod::Bruteforce],
        "spectral" => vec![EnergyMethod::Spectral],
        "conv" | "convolution" => vec![EnergyMethod::Convolution],
        "all" => vec![EnergyMethod::Bruteforce, EnergyMethod::Spectral, EnergyMethod::Convolution],
        other => return Err(Error::Parameter(format!("unknown method {other:?}"))),
    })
}

fn method_name(m: EnergyMethod) -> &'static str {
    match m {
        EnergyMethod::Bruteforce => "brute",
        EnergyMethod::Spectral => "spectral",
        EnergyMethod::Convolution => "conv",
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<(Value, Verdict, Option<String>)> {
    Ok(match &cfg.command {
        Command::Energy { set, k, method } => {
            let a = read_set(set)?;
            let mut methods = serde_json::Map::new();
            let mut values = Vec::new();
            for m in parse_method(method)? {
                let rep = energy(&a, *k, m)?;
                methods.insert(method_name(m).into(), Value::String(rep.value.clone()));
                values.push(rep.value);
            }
            let agree = values.windows(2).all(|w| w[0] == w[1]);
            let result = json!({"value": values[0], "methods": methods, "agree": agree, "k": k, "size": a.len()});
            (result, from_holds(agree), None)
        }
        Command::Spectrum { set, alpha } => {
            let a = read_set(set)?;
            let table = spectrum_of_set(&a);
            let mut result = json!({"dim": a.dim(), "size": a.len(), "hat_zero": table.get(0).to_string()});
            if let Some(al) = alpha {
                let r = large_spectrum_of(&table, al)?;
                result["large_spectrum"] = serde_json::to_value(&r)?;
                result["large_spectrum_size"] = json!(r.len());
            }
            let csv = (cfg.format == Format::Csv).then(|| table.to_csv());
            (result, Verdict::Holds, csv)
        }
        Command::Dissociate { check, k, r } => {
            let l = read_set(check)?;
            let spec = match r {
                Some(p) => FamilySpec::new(*k, read_set(p)?)?,
                None => FamilySpec::zero(*k, l.dim())?,
            };
            let status = check_family(&l, &spec, DEFAULT_BUDGET)?;
            let verdict = match status {
                FamilyStatus::InFamily => Verdict::Holds,
                FamilyStatus::NotInFamily => Verdict::Violated,
                FamilyStatus::UndecidedByBudget => Verdict::Undecided,
            };
            (json!({"status": status.as_str(), "k": k, "size": l.len()}), verdict, None)
        }
        Command::Permanent { matrix } => {
            let h = read_matrix(matrix)?;
            let oriented = if h.rows() > h.cols() { h.transpose() } else { h.clone() };
            let per = permanent(&oriented)?;
            (json!({"rows": h.rows(), "cols": h.cols(), "permanent": per.to_string()}), Verdict::Holds, None)
        }
        Command::FkTest { matrix } => {
            let h = read_matrix(matrix)?;
            let cert = fk_zero_test(&h);
            let certified = verify_certificate(&h, &cert);
            let oriented = if h.rows() > h.cols() { h.transpose() } else { h.clone() };
            let per = permanent(&oriented).ok();
            let consistent = per.as_ref().is_none_or(|p| num_traits::Zero::is_zero(p) == cert.is_zero());
            let result = json!({
                "certificate": serde_json::to_value(&cert)?,
                "certificate_valid": certified,
                "permanent": per.map(|p| p.to_string()),
                "consistent": consistent,
            });
            (result, from_holds(certified && consistent), None)
        }
        Command::LemmaPer0 { matrix, exhaustive } => match (matrix, exhaustive) {
            (Some(m), None) => {
                let rep = reduced_permanent_check(&read_matrix(m)?)?;
                let verdict = match rep.per_h0_positive {
                    None => Verdict::Undecided,
                    Some(ok) => from_holds(ok),
                };
                (serde_json::to_value(&rep)?, verdict, None)
            }
            (None, Some((p, r))) => {
                let rep = exhaustive_per_zero(*p, *r)?;
                let ok = rep.violations.is_empty();
                (serde_json::to_value(&rep)?, from_holds(ok), None)
            }
            _ => return Err(Error::Parameter("lemma-per0 needs exactly one of --matrix or --exhaustive".into())),
        },
        Command::Bench { theorem, sweep: sw, n, delta, d } => {
            if theorem == "majority" && n.is_some() {
                let delta = delta.clone().ok_or_else(|| Error::Parameter("--delta is required with --n".into()))?;
                let inst = build_majority(n.unwrap(), &delta)?;
                let rows: Vec<BoundReport> = (1..=d.unwrap_or(3)).map(|d| verify_majority(&inst, d)).collect::<Result<_>>()?;
                let csv = (cfg.format == Format::Csv).then(|| reports_to_csv(&rows)).transpose()?;
                let verdict = bench_verdict(&rows, 0);
                (json!({"instance": serde_json::to_value(&inst)?, "rows": serde_json::to_value(&rows)?}), verdict, csv)
            } else {
                let mut sc = sw.clone().unwrap_or_default();
                sc.theorem = theorem.clone();
                let res = sweep(&sc)?;
                let rows: Vec<BoundReport> = res.rows.iter().map(|r| r.report.clone()).collect();
                let csv = (cfg.format == Format::Csv).then(|| reports_to_csv(&rows)).transpose()?;
                let verdict = bench_verdict(&rows, res.skipped.len());
                (serde_json::to_value(&res)?, verdict, csv)
            }
        }
        Command::Extract { q, lambda, d, params } => {
            let q = read_set(q)?;
            let lam = read_set(lambda)?;
            let mut params = params.clone();
            params.seed = cfg.seed;
            let v = if *d == 2 {
                serde_json::to_value(&extract_rectangles_pair(&q, &lam, &params)?)?
            } else {
                serde_json::to_value(&extract_rectangles_d(&q, &lam, *d, &params)?)?
            };
            (v, Verdict::Holds, None)
        }
        Command::Plant { h, lsize, lpsize, lambda_size, noise, d, q_out, lambda_out } => {
            let inst = if *d <= 2 {
                plant(*h, *lsize, *lpsize, *lambda_size, noise, cfg.seed)?
            } else {
                plant_prefixed(*d, *lsize, *lpsize, *lambda_size, cfg.seed)?
            };
            if let Some(p) = q_out {
                write_set(p, &inst.q)?;
            }
            if let Some(p) = lambda_out {
                write_set(p, &inst.lambda)?;
            }
            (serde_json::to_value(&inst)?, Verdict::Holds, None)
        }
    })
}

/// Number of worker threads in the current pool.
pub fn thread_count() -> usize {
    rayon::current_num_threads()
}

/// Runs a config and assembles the report; nothing is written to disk
/// except the set files requested by `plant`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let (result, verdict, csv) = execute(cfg)?;
    let meta = json!({
        "runtime_ms": start.elapsed().as_secs_f64() * 1e3,
        "threads": thread_count(),
        "version": env!("CARGO_PKG_VERSION"),
        "verdict": verdict,
    });
    Ok(RunOutcome { report: Report { config: cfg.clone(), result, meta }, verdict, csv })
}

/// Writes the run's primary output: CSV when requested, otherwise the JSON report.
pub fn emit(outcome: &RunOutcome) -> Result<()> {
    let json_text = serde_json::to_string_pretty(&outcome.report)? + "\n";
    let body = match (&outcome.csv, outcome.report.config.format) {
        (Some(csv), Format::Csv) => csv.clone(),
        _ => json_text,
    };
    match &outcome.report.config.out {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayOutcome {
    pub identical: bool,
    pub recorded: String,
    pub replayed: String,
}

/// Re-runs the config stored in a report and compares the serialized result.
pub fn replay_value(report: &Value) -> Result<ReplayOutcome> {
    let config = report.get("config").ok_or_else(|| Error::Parameter("report has no config".into()))?;
    if config.get("seed").is_none_or(Value::is_null) {
        return Err(Error::Parameter("report config has no seed".into()));
    }
    let recorded = report.get("result").ok_or_else(|| Error::Parameter("report has no result".into()))?;
    let mut cfg: ExperimentConfig = serde_json::from_value(config.clone())?;
    cfg.out = None;
    if let Command::Plant { q_out, lambda_out, .. } = &mut cfg.command {
        *q_out = None;
        *lambda_out = None;
    }
    let out = run(&cfg)?;
    let recorded = serde_json::to_string(recorded)?;
    let replayed = serde_json::to_string(&out.report.result)?;
    Ok(ReplayOutcome { identical: recorded == replayed, recorded, replayed })
}

pub fn replay(path: &Path) -> Result<ReplayOutcome> {
    let text = std::fs::read_to_string(path)?;
    replay_value(&serde_json::from_str(&text)?)
}

#[derive(Parser, Debug)]
#[command(name = "f2comb", version, about = "Exact additive combinatorics over F_2^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn rational_arg(s: &str) -> std::result::Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn pair_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once([',', ' ', 'x']).ok_or("expected P,R")?;
    Ok((a.trim().parse().map_err(|_| "bad P")?, b.trim().parse().map_err(|_| "bad R")?))
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Additive energy T_k of a set.
    Energy {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "all")]
        method: String,
        #[command(flatten)]
        common: Common,
    },
    /// Walsh–Hadamard spectrum and large spectrum.
    Spectrum {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_parser = rational_arg)]
        alpha: Option<BigRational>,
        #[command(flatten)]
        common: Common,
    },
    /// Membership in the family Λ_R(k).
    Dissociate {
        #[arg(long)]
        check: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long = "R")]
        r: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Permanent of a nonnegative integer matrix.
    Permanent {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Frobenius–König zero test with a certificate.
    FkTest {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Positivity of the reduced permanent, on one matrix or exhaustively.
    LemmaPer0 {
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// "P,R": every {0,1,2} matrix of that shape.
        #[arg(long, value_parser = pair_arg)]
        exhaustive: Option<(usize, usize)>,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded inequality sweeps.
    Bench {
        #[arg(long)]
        theorem: String,
        /// JSON sweep config.
        #[arg(long)]
        sweep: Option<PathBuf>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, value_parser = rational_arg)]
        delta: Option<BigRational>,
        #[arg(long)]
        d: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Rectangle extraction from a subset of a distinct sumset.
    Extract {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        p: Option<usize>,
        /// JSON file with pipeline parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Planted rectangle instances.
    Plant {
        #[arg(long)]
        h: usize,
        #[arg(long)]
        lsize: usize,
        #[arg(long)]
        lpsize: usize,
        #[arg(long, default_value_t = 16)]
        lambda_size: usize,
        #[arg(long, value_parser = rational_arg, default_value = "0")]
        noise: BigRational,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        q_out: Option<PathBuf>,
        #[arg(long)]
        lambda_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a recorded report and compare its result.
    Replay {
        #[arg(long)]
        report: PathBuf,
    },
}

fn infer_format(common: &Common) -> Format {
    common.format.unwrap_or_else(|| match common.out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "csv" => Format::Csv,
        _ => Format::Json,
    })
}

/// Turns parsed arguments into a config; `None` for `replay`.
pub fn to_config(cmd: CliCommand) -> Result<Option<ExperimentConfig>> {
    let (command, common) = match cmd {
        CliCommand::Energy { set, k, method, common } => (Command::Energy { set, k, method }, common),
        CliCommand::Spectrum { set, alpha, common } => (Command::Spectrum { set, alpha }, common),
        CliCommand::Dissociate { check, k, r, common } => (Command::Dissociate { check, k, r }, common),
        CliCommand::Permanent { matrix, common } => (Command::Permanent { matrix }, common),
        CliCommand::FkTest { matrix, common } => (Command::FkTest { matrix }, common),
        CliCommand::LemmaPer0 { matrix, exhaustive, common } => (Command::LemmaPer0 { matrix, exhaustive }, common),
        CliCommand::Bench { theorem, sweep, instances, n, delta, d, common } => {
            let mut sc: Option<SweepConfig> = match sweep {
                Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(p)?)?),
                None => None,
            };
            if sc.is_none() && n.is_none() {
                sc = Some(SweepConfig { seed: common.seed, ..SweepConfig::default() });
            }
            if let Some(s) = sc.as_mut() {
                s.theorem = theorem.clone();
                if let Some(i) = instances {
                    s.instances = i;
                }
            }
            (Command::Bench { theorem, sweep: sc, n, delta, d }, common)
        }
        CliCommand::Extract { q, lambda, d, p, params, common } => {
            let mut ip: InverseParams = match params {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => InverseParams::default(),
            };
            if let Some(p) = p {
                ip.p = p;
            }
            ip.seed = common.seed;
            (Command::Extract { q, lambda, d, params: ip }, common)
        }
        CliCommand::Plant { h, lsize, lpsize, lambda_size, noise, d, q_out, lambda_out, common } => {
            (Command::Plant { h, lsize, lpsize, lambda_size, noise, d, q_out, lambda_out }, common)
        }
        CliCommand::Replay { .. } => return Ok(None),
    };
    let format = infer_format(&common);
    Ok(Some(ExperimentConfig { command, seed: common.seed, out: common.out, format }))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.trim().parse().map_err(|_| Error::Parameter(format!("{THREADS_VAR}={v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    configure_threads()?;
    if let CliCommand::Replay { report } = &cli.command {
        let out = replay(report)?;
        if out.identical {
            eprintln!("replay: identical");
            return Ok(0);
        }
        return Err(Error::Mismatch(format!("recorded {} bytes, replayed {} bytes differ", out.recorded.len(), out.replayed.len())));
    }
    let cfg = to_config(cli.command)?.expect("non-replay command");
    let outcome = run(&cfg)?;
    emit(&outcome)?;
    Ok(outcome.verdict.exit_code())
}

/// Entry point of the `f2comb` binary; returns the process exit status.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

/// Reads a set file; re-exported for callers assembling configs by hand.
pub fn load_set(path: &Path) -> Result<F2Set> {
    read_set(path)
}
