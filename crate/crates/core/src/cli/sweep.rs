//! Gain sweeps over `sqrt(N_p)` and the mean-photon-number root search.

use super::config::RunConfig;
use super::output::fmt_f64;
use super::run::simulate;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

/// Squeezing parameters listed per sweep row.
pub const SWEEP_MODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepScale {
    Lin,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub sqrt_np: f64,
    pub n_photons: f64,
    /// Leading squeezing parameters, zero-padded to [`SWEEP_MODES`].
    pub r: Vec<f64>,
    pub mean_n_signal: f64,
    pub mean_n_idler: f64,
    pub schmidt_number: f64,
    pub su11_residual: f64,
}

/// Parameter values of a sweep, in the order given.
pub fn sweep_values(from: f64, to: f64, points: usize, scale: SweepScale) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::config("points", "need at least one point"));
    }
    if !(from.is_finite() && to.is_finite()) || from < 0.0 || to < 0.0 {
        return Err(Error::config("from", "sqrt_np bounds must be finite and non-negative"));
    }
    if points > 1 && from == to {
        return Err(Error::config("to", "a multi-point sweep needs distinct bounds"));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let t = |k: usize| k as f64 / (points - 1) as f64;
    Ok(match scale {
        SweepScale::Lin => (0..points).map(|k| from + (to - from) * t(k)).collect(),
        SweepScale::Log => {
            if from <= 0.0 {
                return Err(Error::config("from", "a log sweep needs positive bounds"));
            }
            let (a, b) = (from.ln(), to.ln());
            (0..points)
                .map(|k| match k {
                    0 => from,
                    k if k == points - 1 => to,
                    k => (a + (b - a) * t(k)).exp(),
                })
                .collect()
        }
    })
}

pub fn with_sqrt_np(config: &RunConfig, sqrt_np: f64) -> RunConfig {
    let mut c = config.clone();
    c.pump.n_photons = sqrt_np * sqrt_np;
    c
}

pub fn evaluate(config: &RunConfig, sqrt_np: f64) -> Result<SweepRow> {
    let cfg = with_sqrt_np(config, sqrt_np);
    let out = simulate(&cfg.resolve()?)?;
    let mut r = out.r();
    r.resize(SWEEP_MODES.max(r.len()), 0.0);
    r.truncate(SWEEP_MODES);
    Ok(SweepRow {
        sqrt_np,
        n_photons: cfg.pump.n_photons,
        r,
        mean_n_signal: out.observables.mean_n_signal,
        mean_n_idler: out.observables.mean_n_idler,
        schmidt_number: out.observables.schmidt_number,
        su11_residual: out.su11.worst(),
    })
}

/// Worker count: `TBSIM_THREADS` if set, otherwise the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var("TBSIM_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config("TBSIM_THREADS", format!("expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Evaluate every sweep point; rows come back in parameter order whatever
/// the completion order.
pub fn run_sweep(config: &RunConfig, values: &[f64], threads: usize) -> Result<Vec<SweepRow>> {
    config.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.clamp(1, values.len().max(1)))
        .build()
        .map_err(|e| Error::State(format!("cannot start worker pool: {e}")))?;
    pool.install(|| values.par_iter().map(|&x| evaluate(config, x)).collect())
}

pub fn sweep_csv(hash: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("# config_sha256={hash}\nsqrt_np,n_photons");
    for l in 1..=SWEEP_MODES {
        let _ = write!(s, ",r_{l}");
    }
    s.push_str(",mean_n_signal,mean_n_idler,schmidt_number,su11_residual\n");
    for row in rows {
        let mut fields = vec![fmt_f64(row.sqrt_np), fmt_f64(row.n_photons)];
        fields.extend(row.r.iter().map(|&x| fmt_f64(x)));
        fields.extend([row.mean_n_signal, row.mean_n_idler, row.schmidt_number, row.su11_residual].map(fmt_f64));
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bisection {
    pub target: f64,
    pub tolerance: f64,
    pub sqrt_np: f64,
    pub n_photons: f64,
    pub mean_n_signal: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Find `sqrt(N_p)` in `[lo, hi]` where the mean signal photon number equals
/// `target` within `tolerance`.
///
/// A bracketed search on `asinh(sqrt(<N>))`, which is close to linear in
/// `sqrt(N_p)`: regula falsi with the Illinois weighting, falling back to
/// plain bisection when an interpolated point is not strictly inside.
pub fn bisect_mean_photons(config: &RunConfig, target: f64, lo: f64, hi: f64, tolerance: f64) -> Result<Bisection> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::config("bisect_mean_photons", "target must be positive"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::config("tolerance", "must be positive"));
    }
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::config("from", "need 0 <= from < to"));
    }
    let goal = target.sqrt().asinh();
    let mut evaluations = 0;
    let mut eval = |s: f64| -> Result<(f64, f64)> {
        evaluations += 1;
        let n = evaluate(config, s)?.mean_n_signal;
        Ok((n, n.sqrt().asinh() - goal))
    };
    let (mut a, mut b) = (lo, hi);
    let (_, mut fa) = eval(a)?;
    let (n_hi, mut fb) = eval(b)?;
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::config(
            "to",
            format!("range [{lo}, {hi}] does not bracket <N> = {target} (reached {n_hi} at the upper end)"),
        ));
    }
    let mut side = 0i8;
    let mut best = (b, n_hi);
    for _ in 0..200 {
        let mut s = (a * fb - b * fa) / (fb - fa);
        if !(s > a && s < b) {
            s = 0.5 * (a + b);
        }
        let (n, f) = eval(s)?;
        if (n - target).abs() < (best.1 - target).abs() {
            best = (s, n);
        }
        if (n - target).abs() <= tolerance {
            break;
        }
        if f < 0.0 {
            a = s;
            fa = f;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = s;
            fb = f;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    Ok(Bisection {
        target,
        tolerance,
        sqrt_np: best.0,
        n_photons: best.0 * best.0,
        mean_n_signal: best.1,
        evaluations,
        converged: (best.1 - target).abs() <= tolerance,
    })
}
