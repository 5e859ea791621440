//! Reports, CSV tables and binary dumps.
//!
//! Every text artifact starts with `# config_sha256=<hex>`. Binary dumps
//! cannot carry it, so the report lists the SHA-256 of every file written.

use super::config::{Artifact, ResolvedRun};
use super::run::{RunOutcome, SolverInfo};
use crate::decompose::DecompositionResiduals;
use crate::dump;
use crate::error::Result;
use crate::linalg::{CMatrix, carg, cabs};
use crate::propagator::Su11Report;
use crate::units::{Conversion, Scales};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const TOOL_NAME: &str = "tbsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Compact JSON with object keys in sorted order.
pub fn canonical_json(value: &Value) -> String {
    fn sorted(v: &Value) -> Value {
        match v {
            Value::Object(map) => {
                let ordered: BTreeMap<&String, Value> = map.iter().map(|(k, v)| (k, sorted(v))).collect();
                Value::Object(ordered.into_iter().map(|(k, v)| (k.clone(), v)).collect())
            }
            Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    sorted(value).to_string()
}

pub fn config_hash(value: &Value) -> String {
    sha256_hex(canonical_json(value).as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitsReport {
    pub system: &'static str,
    /// SI size of each internal unit, when physical scales were given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_sizes: Option<BTreeMap<&'static str, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Scales>,
    pub conversions: Vec<Conversion>,
}

impl UnitsReport {
    pub fn new(scales: Option<Scales>, conversions: Vec<Conversion>) -> Self {
        use crate::units::Dimension::*;
        let unit_sizes = scales.map(|s| {
            BTreeMap::from([
                ("length_m", s.unit_size(Length)),
                ("time_s", s.unit_size(Time)),
                ("angular_frequency_rad_per_s", s.unit_size(Frequency)),
                ("velocity_m_per_s", s.unit_size(Velocity)),
                ("energy_j", s.unit_size(Energy)),
            ])
        });
        Self {
            system: "internal: v_p = 1, sigma = 1, hbar omega_p = 1",
            unit_sizes,
            scales,
            conversions,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub n_points: usize,
    pub span: f64,
    pub delta_omega: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultsReport {
    pub r: Vec<f64>,
    pub mean_n_signal: f64,
    pub mean_n_idler: f64,
    /// Photon numbers from the block traces, an independent check.
    pub mean_n_signal_from_blocks: f64,
    pub mean_n_idler_from_blocks: f64,
    pub schmidt_number: f64,
    pub jsa_schmidt_number: f64,
    pub vacuum: bool,
    pub occupied_modes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualsReport {
    pub su11: Su11Report,
    pub decomposition: DecompositionResiduals,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub config_sha256: String,
    pub config: Value,
    pub units: UnitsReport,
    pub grid: GridReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub waveguide_velocities: BTreeMap<&'static str, f64>,
    pub solver: SolverInfo,
    pub results: ResultsReport,
    pub residuals: ResidualsReport,
    pub warnings: Vec<String>,
    /// SHA-256 of every artifact written next to the report.
    pub artifacts: BTreeMap<String, String>,
}

impl RunReport {
    pub fn new(config: &Value, run: &ResolvedRun, out: &RunOutcome, n_modes: usize) -> Self {
        let r = out.r();
        let listed = out.observables.occupied.max(n_modes).min(r.len());
        Self {
            tool: ToolInfo::default(),
            config_sha256: config_hash(config),
            config: config.clone(),
            units: UnitsReport::new(run.scales, run.conversions.clone()),
            grid: GridReport {
                n_points: run.grid.n_points(),
                span: run.grid.span(),
                delta_omega: run.grid.delta_omega(),
            },
            kappa: run.kappa,
            waveguide_velocities: BTreeMap::from([
                ("v_s", run.waveguide.v_s),
                ("v_i", run.waveguide.v_i),
                ("v_p", run.waveguide.v_p),
            ]),
            solver: out.solver.clone(),
            results: ResultsReport {
                r: r[..listed].to_vec(),
                mean_n_signal: out.observables.mean_n_signal,
                mean_n_idler: out.observables.mean_n_idler,
                mean_n_signal_from_blocks: out.block_photons.0,
                mean_n_idler_from_blocks: out.block_photons.1,
                schmidt_number: out.observables.schmidt_number,
                jsa_schmidt_number: out.observables.jsa_schmidt_number,
                vacuum: out.observables.vacuum,
                occupied_modes: out.observables.occupied,
            },
            residuals: ResidualsReport {
                su11: out.su11.clone(),
                decomposition: out.residuals.clone(),
            },
            warnings: out.warnings.clone(),
            artifacts: BTreeMap::new(),
        }
    }
}

fn csv_header(hash: &str, columns: &str) -> String {
    format!("# config_sha256={hash}\n{columns}\n")
}

/// Kernel on the grid as rows `nu_s, nu_i, abs, arg`.
pub fn kernel_csv(hash: &str, nu: &[f64], kernel: &CMatrix<f64>) -> String {
    let mut s = csv_header(hash, "nu_s,nu_i,abs,arg");
    for (a, &x) in nu.iter().enumerate() {
        for (b, &y) in nu.iter().enumerate() {
            let z = kernel[(a, b)];
            let _ = writeln!(s, "{},{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(cabs(z)), fmt_f64(carg(z)));
        }
    }
    s
}

/// Leading Schmidt modes as rows `mode, r, nu, rho_s (re, im), rho_i (re, im)`.
pub fn modes_csv(hash: &str, nu: &[f64], out: &RunOutcome, n_modes: usize) -> String {
    let mut s = csv_header(hash, "mode,r,nu,rho_s_re,rho_s_im,rho_i_re,rho_i_im");
    let d = &out.decomposition;
    for l in 0..n_modes.min(d.r().len()) {
        for (k, &x) in nu.iter().enumerate() {
            let (p, q) = (d.rho_s()[(k, l)], d.rho_i()[(k, l)]);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                l + 1,
                fmt_f64(d.r()[l]),
                fmt_f64(x),
                fmt_f64(p.re),
                fmt_f64(p.im),
                fmt_f64(q.re),
                fmt_f64(q.im)
            );
        }
    }
    s
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8], hashes: &mut BTreeMap<String, String>) -> Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(bytes)?;
    hashes.insert(name.to_string(), sha256_hex(bytes));
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Write the requested artifacts and the report into `dir`; returns the report.
pub fn write_run(
    dir: &Path,
    config: &Value,
    artifacts: &[Artifact],
    n_modes: usize,
    run: &ResolvedRun,
    out: &RunOutcome,
) -> Result<RunReport> {
    fs::create_dir_all(dir)?;
    let mut report = RunReport::new(config, run, out, n_modes);
    let hash = report.config_sha256.clone();
    let nu = run.grid.nu();
    let mut hashes = BTreeMap::new();
    if artifacts.contains(&Artifact::Jsa) {
        write_artifact(dir, "jsa.csv", kernel_csv(&hash, nu, &out.observables.jsa).as_bytes(), &mut hashes)?;
        write_artifact(dir, "jsa.tbsm", &dump::encode(&out.observables.jsa), &mut hashes)?;
    }
    if artifacts.contains(&Artifact::Moment) {
        write_artifact(dir, "moment.csv", kernel_csv(&hash, nu, &out.observables.moment).as_bytes(), &mut hashes)?;
        write_artifact(dir, "moment.tbsm", &dump::encode(&out.observables.moment), &mut hashes)?;
    }
    if artifacts.contains(&Artifact::Modes) {
        write_artifact(dir, "modes.csv", modes_csv(&hash, nu, out, n_modes).as_bytes(), &mut hashes)?;
    }
    if artifacts.contains(&Artifact::Propagator) {
        write_artifact(dir, "propagator.tbsm", &dump::encode(out.propagator.matrix()), &mut hashes)?;
    }
    report.artifacts = hashes;
    // The report is always written; it is the only place residuals live.
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("timing.json"), &out.timing)?;
    Ok(report)
}
