//! Single-run orchestration: config to propagator to observables.

use super::config::{ResolvedRun, SolverChoice};
use crate::coupling::TwinBeamGenerator;
use crate::decompose::{
    mean_photons_from_blocks, schmidt_decompose, DecompositionResiduals, TwinBeamDecomposition, TwinBeamObservables,
};
use crate::error::Result;
use crate::propagator::{
    check_su11, dress_in_out, propagate_trotter, propagate_uniform, DressingConvention, Propagator, StepControl,
    Su11Report,
};
use crate::pump::PumpField;
use serde::Serialize;
use std::time::Instant;

/// Tolerance used for the pass flag of the SU(1,1) report.
pub const REPORT_SU11_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverInfo {
    pub kind: &'static str,
    pub n_steps: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_change: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Wall-clock seconds per stage. Kept out of the report so that reports are
/// reproducible byte for byte.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    /// Pump sampling, generator assembly and propagation.
    pub propagate_s: f64,
    pub decompose_s: f64,
    pub total_s: f64,
}

pub struct RunOutcome {
    /// Input/output transfer matrix over the nonlinear region.
    pub propagator: Propagator<f64>,
    pub decomposition: TwinBeamDecomposition<f64>,
    pub observables: TwinBeamObservables<f64>,
    pub su11: Su11Report,
    pub residuals: DecompositionResiduals,
    /// `(sum |U_si|^2, sum |U_is|^2)`.
    pub block_photons: (f64, f64),
    pub solver: SolverInfo,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl RunOutcome {
    pub fn r(&self) -> Vec<f64> {
        self.decomposition.r().to_vec()
    }
}

/// Propagate over the nonlinear region and dress into input/output form.
pub fn propagate(run: &ResolvedRun) -> Result<(Propagator<f64>, SolverInfo, Vec<String>)> {
    let pump = PumpField::new(run.pump.clone(), run.envelope_grid)?;
    let mut warnings = pump.warnings().to_vec();
    let generator = TwinBeamGenerator::new(pump, run.waveguide.clone(), run.grid.clone())?;
    let (z0, z1) = (run.waveguide.ell_min, run.waveguide.ell_max);
    let (raw, info) = match run.solver {
        SolverChoice::Uniform => {
            let m = generator.matrices(0.5 * (z0 + z1))?;
            let prop = propagate_uniform(&m, z0, z1)?;
            let info = SolverInfo {
                kind: "uniform",
                n_steps: 1,
                converged: true,
                last_change: None,
                tolerance: None,
            };
            (prop, info)
        }
        SolverChoice::Trotter(control) => {
            let out = propagate_trotter(&generator, z0, z1, control)?;
            let tolerance = match control {
                StepControl::Adaptive { tolerance, .. } => Some(tolerance),
                StepControl::Fixed(_) => None,
            };
            if !out.converged {
                warnings.push(format!(
                    "adaptive trotter stopped at {} steps with change {:e} above tolerance",
                    out.n_steps,
                    out.last_change.unwrap_or(f64::NAN)
                ));
            }
            let info = SolverInfo {
                kind: "trotter",
                n_steps: out.n_steps,
                converged: out.converged,
                last_change: out.last_change,
                tolerance,
            };
            (out.propagator, info)
        }
    };
    let dressed = dress_in_out(&raw, &run.waveguide, &run.grid, DressingConvention::Consistent)?;
    Ok((dressed, info, warnings))
}

pub fn simulate(run: &ResolvedRun) -> Result<RunOutcome> {
    let start = Instant::now();
    let (propagator, solver, mut warnings) = propagate(run)?;
    let propagated = Instant::now();
    let su11 = check_su11(&propagator, REPORT_SU11_TOLERANCE);
    if !su11.passed {
        warnings.push(format!(
            "SU(1,1) residual {:e} exceeds {REPORT_SU11_TOLERANCE:e}",
            su11.worst()
        ));
    }
    let decomposition = schmidt_decompose(&propagator, run.grid.delta_omega())?;
    let residuals = decomposition.residuals(&propagator)?;
    let observables = decomposition.observables();
    let block_photons = mean_photons_from_blocks(&propagator);
    let done = Instant::now();
    let timing = Timing {
        propagate_s: (propagated - start).as_secs_f64(),
        decompose_s: (done - propagated).as_secs_f64(),
        total_s: (done - start).as_secs_f64(),
    };
    Ok(RunOutcome {
        propagator,
        decomposition,
        observables,
        su11,
        residuals,
        block_photons,
        solver,
        warnings,
        timing,
    })
}
