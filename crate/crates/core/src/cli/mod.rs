//! Command-line front end: configuration ingestion, orchestration and
//! artifact emission.
//!
//! Exit codes: 0 on success, 1 when a run or validation check fails, 2 when
//! the input cannot be used (unreadable file, malformed JSON, schema or
//! solver-applicability violation). Errors go to stderr as one JSON object.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;
pub mod validate;

use crate::coupling::{estimate_gamma, EstimateInputs};
use crate::error::{Error, Result};
use clap::{Parser, Subcommand};
use output::{config_hash, write_json, write_run, ToolInfo};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use sweep::SweepScale;
use validate::{Fault, Suite};

#[derive(Debug, Parser)]
#[command(name = "tbsim", version, about = "High-gain twin-beam simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    #[value(name = "sqrt_np", alias = "sqrt-np")]
    SqrtNp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write the report and data files.
    Simulate {
        config: PathBuf,
        /// Output directory; overrides `outputs.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the pump amplitude sqrt(N_p), or search it for a photon number.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "sqrt_np")]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of sweep points (required unless searching).
        #[arg(long, required_unless_present = "bisect_mean_photons")]
        points: Option<usize>,
        #[arg(long, value_enum, default_value = "lin")]
        scale: SweepScale,
        /// Find sqrt(N_p) in [from, to] giving this mean photon number.
        #[arg(long)]
        bisect_mean_photons: Option<f64>,
        /// Absolute photon-number tolerance of the search.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite (built in, or on one configuration).
    Validate {
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "full")]
        suite: Suite,
        /// Deliberately corrupt a stage to check that the suite notices.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Order-of-magnitude coupling constants from waveguide parameters (SI).
    Estimate { params: PathBuf },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Json { .. } | Error::Config { .. } | Error::SolverApplicability { .. } | Error::Io(_) => 2,
        _ => 1,
    }
}

pub fn error_json(e: &Error) -> Value {
    let mut body = json!({ "kind": e.kind(), "message": e.to_string() });
    match e {
        Error::Json { line, column, .. } => {
            body["line"] = json!(line);
            body["column"] = json!(column);
        }
        Error::Config { field, reason } => {
            body["field"] = json!(field);
            body["reason"] = json!(reason);
        }
        _ => {}
    }
    json!({ "error": body })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serialisable"));
}

fn cmd_simulate(config: &Path, out: Option<PathBuf>) -> Result<i32> {
    let (value, cfg) = config::parse_config(&read_text(config)?)?;
    let run = cfg.resolve()?;
    let outcome = run::simulate(&run)?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    let report = write_run(&dir, &value, &cfg.outputs.artifacts, cfg.outputs.n_modes, &run, &outcome)?;
    print_json(&json!({
        "report": dir.join("report.json"),
        "config_sha256": report.config_sha256,
        "r": report.results.r.iter().take(cfg.outputs.n_modes).collect::<Vec<_>>(),
        "mean_n_signal": report.results.mean_n_signal,
        "schmidt_number": report.results.schmidt_number,
        "su11_residual": report.residuals.su11.worst(),
    }));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: &Path,
    from: f64,
    to: f64,
    points: Option<usize>,
    scale: SweepScale,
    bisect: Option<f64>,
    tolerance: f64,
    out: Option<PathBuf>,
) -> Result<i32> {
    let (value, cfg) = config::parse_config(&read_text(config)?)?;
    let hash = config_hash(&value);
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    std::fs::create_dir_all(&dir)?;
    if let Some(target) = bisect {
        let found = sweep::bisect_mean_photons(&cfg, target, from, to, tolerance)?;
        let doc = json!({
            "tool": ToolInfo::default(),
            "config_sha256": hash,
            "config": value,
            "search": found,
        });
        write_json(&dir.join("bisection.json"), &doc)?;
        print_json(&doc["search"]);
        return Ok(if found.converged { 0 } else { 1 });
    }
    let values = sweep::sweep_values(from, to, points.unwrap_or(1), scale)?;
    let rows = sweep::run_sweep(&cfg, &values, sweep::worker_count()?)?;
    let text = sweep::sweep_csv(&hash, &rows);
    std::fs::write(dir.join("sweep.csv"), &text)?;
    print!("{text}");
    Ok(0)
}

fn cmd_validate(config: Option<PathBuf>, suite: Suite, fault: Option<Fault>) -> Result<i32> {
    let report = match config {
        Some(path) => {
            let (_, cfg) = config::parse_config(&read_text(&path)?)?;
            validate::validate_config(&cfg.resolve()?, fault)?
        }
        None => validate::run_suite(suite, fault)?,
    };
    print_json(&serde_json::to_value(&report)?);
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_estimate(params: &Path) -> Result<i32> {
    let text = read_text(params)?;
    let value: Value = serde_json::from_str(&text)?;
    let inputs: EstimateInputs = serde_path_to_error::deserialize(&value)
        .map_err(|e| Error::config(e.path().to_string(), e.into_inner().to_string()))?;
    let estimate = estimate_gamma(&inputs)?;
    print_json(&json!({
        "tool": ToolInfo::default(),
        "inputs_sha256": config_hash(&value),
        "model": "flat-mode effective-area estimate (order of magnitude)",
        "estimate": estimate,
    }));
    Ok(0)
}

/// Run a parsed command line, returning the process exit code.
pub fn run_cli(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, out),
        Command::Sweep {
            config,
            param: SweepParam::SqrtNp,
            from,
            to,
            points,
            scale,
            bisect_mean_photons,
            tolerance,
            out,
        } => cmd_sweep(&config, from, to, points, scale, bisect_mean_photons, tolerance, out),
        Command::Validate {
            config,
            suite,
            inject_fault,
        } => cmd_validate(config, suite, inject_fault),
        Command::Estimate { params } => cmd_estimate(&params),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
