//! Run configuration (JSON, schema version 1).
//!
//! Parsing happens in two stages so that syntax errors keep their line and
//! column while schema violations name the offending field path.

use crate::analytic::kappa_optimal;
use crate::coupling::{symmetric_gvm_velocities, CarrierInfo, WaveguideSpec};
use crate::error::{Error, Result};
use crate::grid::{make_grid, FrequencyGrid, DEFAULT_SPAN_IN_SIGMAS};
use crate::linalg::c;
use crate::profile::{Profile, Segment};
use crate::propagator::StepControl;
use crate::pump::{EnvelopeGrid, EnvelopeShape, ProcessOrder, PumpSpec};
use crate::units::{si_value, Conversion, Converter, Dimension, Quantity, Scales};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<ScalesConfig>,
    pub pump: PumpConfig,
    pub waveguide: WaveguideConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// Physical values of the internal scales; all three carry SI tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    pub sigma: Quantity,
    pub v_p: Quantity,
    pub photon_energy: Quantity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderTag {
    Spdc,
    Sfwm,
}

impl From<OrderTag> for ProcessOrder {
    fn from(t: OrderTag) -> Self {
        match t {
            OrderTag::Spdc => ProcessOrder::Spdc,
            OrderTag::Sfwm => ProcessOrder::Sfwm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start: Quantity,
    pub end: Quantity,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    Gaussian,
    /// Samples in internal units; rescaled to carry `n_photons`.
    Sampled {
        z: Vec<f64>,
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeGridConfig {
    pub n_points: usize,
    pub half_widths: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub n_photons: f64,
    #[serde(default = "PumpConfig::default_order")]
    pub order: OrderTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_p: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_energy: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<Quantity>,
    /// Self-phase modulation strength segments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zeta_p: Vec<SegmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_grid: Option<EnvelopeGridConfig>,
}

impl PumpConfig {
    fn default_order() -> OrderTag {
        OrderTag::Spdc
    }
}

/// `"optimal"` or a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaConfig {
    Value(f64),
    Named(String),
}

/// A real number or `{"re": .., "im": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexConfig {
    Real(f64),
    Complex { re: f64, im: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideConfig {
    pub ell_min: Quantity,
    pub ell_max: Quantity,
    /// Squeezing coupling in internal units.
    pub gamma_delta: ComplexConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_s: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_i: Option<Quantity>,
    /// Symmetric group-velocity matching; replaces `v_s` and `v_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_profile: Option<Vec<SegmentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poling_period: Option<Quantity>,
    #[serde(default)]
    pub gamma_xpm_s: f64,
    #[serde(default)]
    pub gamma_xpm_i: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_s_profile: Option<Vec<SegmentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_i_profile: Option<Vec<SegmentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<CarrierInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "GridConfig::default_points")]
    pub n_points: usize,
    /// Half-width of the detuning window; defaults to four pump bandwidths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Quantity>,
}

impl GridConfig {
    fn default_points() -> usize {
        200
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: Self::default_points(),
            span: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Uniform,
    Trotter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Uniform,
            n_steps: None,
            tolerance: None,
            max_steps: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    Report,
    Jsa,
    Moment,
    Modes,
    Propagator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "OutputsConfig::default_dir")]
    pub dir: String,
    #[serde(default = "OutputsConfig::default_artifacts")]
    pub artifacts: Vec<Artifact>,
    /// Number of Schmidt modes written to `modes.csv`.
    #[serde(default = "OutputsConfig::default_modes")]
    pub n_modes: usize,
}

impl OutputsConfig {
    fn default_dir() -> String {
        "out".into()
    }

    fn default_artifacts() -> Vec<Artifact> {
        vec![Artifact::Report, Artifact::Jsa, Artifact::Moment, Artifact::Modes]
    }

    fn default_modes() -> usize {
        4
    }

    pub fn wants(&self, a: Artifact) -> bool {
        self.artifacts.contains(&a)
    }
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            dir: Self::default_dir(),
            artifacts: Self::default_artifacts(),
            n_modes: Self::default_modes(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverChoice {
    Uniform,
    Trotter(StepControl),
}

/// A configuration converted to internal units and checked.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub pump: PumpSpec<f64>,
    pub envelope_grid: EnvelopeGrid,
    pub waveguide: WaveguideSpec<f64>,
    pub grid: FrequencyGrid<f64>,
    pub solver: SolverChoice,
    /// Value used when `kappa` was given.
    pub kappa: Option<f64>,
    pub scales: Option<Scales>,
    pub conversions: Vec<Conversion>,
}

/// Parse JSON text into the raw document and the typed configuration.
pub fn parse_config(text: &str) -> Result<(Value, RunConfig)> {
    let value: Value = serde_json::from_str(text)?;
    let config = config_from_value(&value)?;
    Ok((value, config))
}

pub fn config_from_value(value: &Value) -> Result<RunConfig> {
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
    })?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(Error::config(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", config.schema_version),
        ));
    }
    Ok(config)
}

fn segments(conv: &mut Converter, segs: &[SegmentConfig], field: &str) -> Result<Profile<f64>> {
    let mut out = Vec::with_capacity(segs.len());
    for (k, s) in segs.iter().enumerate() {
        out.push(Segment {
            start: conv.convert(&s.start, Dimension::Length, &format!("{field}[{k}].start"))?,
            end: conv.convert(&s.end, Dimension::Length, &format!("{field}[{k}].end"))?,
            value: s.value,
        });
    }
    Profile::new(out).map_err(|e| match e {
        Error::Config { field: sub, reason } => Error::config(format!("{field}.{sub}"), reason),
        other => other,
    })
}

fn optional(conv: &mut Converter, q: &Option<Quantity>, dim: Dimension, field: &str, default: f64) -> Result<f64> {
    match q {
        Some(q) => conv.convert(q, dim, field),
        None => Ok(default),
    }
}

impl RunConfig {
    /// Convert to internal units and build the physical specifications.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let scales = match &self.scales {
            Some(s) => Some(Scales::new(
                si_value(&s.sigma, Dimension::Frequency, "scales.sigma")?,
                si_value(&s.v_p, Dimension::Velocity, "scales.v_p")?,
                si_value(&s.photon_energy, Dimension::Energy, "scales.photon_energy")?,
            )?),
            None => None,
        };
        let mut conv = Converter::new(scales);
        let p = &self.pump;
        if !(p.n_photons.is_finite() && p.n_photons >= 0.0) {
            return Err(Error::config("pump.n_photons", format!("must be finite and non-negative, got {}", p.n_photons)));
        }
        let order: ProcessOrder = p.order.into();
        let sigma = optional(&mut conv, &p.sigma, Dimension::Frequency, "pump.sigma", 1.0)?;
        let v_p = optional(&mut conv, &p.v_p, Dimension::Velocity, "pump.v_p", 1.0)?;
        let envelope = match &p.envelope {
            None | Some(EnvelopeConfig::Gaussian) => EnvelopeShape::Gaussian,
            Some(EnvelopeConfig::Sampled { z, re, im }) => {
                if re.len() != z.len() || !(im.is_empty() || im.len() == z.len()) {
                    return Err(Error::config("pump.envelope", "z, re and im must have equal lengths"));
                }
                let values = (0..z.len()).map(|k| c(re[k], im.get(k).copied().unwrap_or(0.0))).collect();
                EnvelopeShape::Sampled { z: z.clone(), values }
            }
        };
        let pump = PumpSpec {
            n_photons: p.n_photons,
            sigma,
            z0: optional(&mut conv, &p.z0, Dimension::Length, "pump.z0", 0.0)?,
            t0: optional(&mut conv, &p.t0, Dimension::Time, "pump.t0", 0.0)?,
            v_p,
            zeta_p: segments(&mut conv, &p.zeta_p, "pump.zeta_p")?,
            order,
            photon_energy: optional(&mut conv, &p.photon_energy, Dimension::Energy, "pump.photon_energy", 1.0)?,
            envelope,
        };
        pump.validate()?;
        let envelope_grid = match p.envelope_grid {
            Some(g) => {
                if g.n_points < 2 || !(g.half_widths.is_finite() && g.half_widths > 0.0) {
                    return Err(Error::config("pump.envelope_grid", "need n_points >= 2 and positive half_widths"));
                }
                EnvelopeGrid {
                    n_points: g.n_points,
                    half_widths: g.half_widths,
                }
            }
            None => EnvelopeGrid::default(),
        };

        let w = &self.waveguide;
        let ell_min = conv.convert(&w.ell_min, Dimension::Length, "waveguide.ell_min")?;
        let ell_max = conv.convert(&w.ell_max, Dimension::Length, "waveguide.ell_max")?;
        if !(ell_max > ell_min) {
            return Err(Error::config("waveguide.ell_max", "must exceed ell_min"));
        }
        let (v_s, v_i, kappa) = match (&w.kappa, &w.v_s, &w.v_i) {
            (Some(k), None, None) => {
                let kappa = match k {
                    KappaConfig::Value(x) => *x,
                    KappaConfig::Named(s) if s == "optimal" => kappa_optimal(sigma)?,
                    KappaConfig::Named(s) => {
                        return Err(Error::config("waveguide.kappa", format!("expected a number or \"optimal\", got \"{s}\"")))
                    }
                };
                let (v_s, v_i) = symmetric_gvm_velocities(v_p, kappa, ell_max - ell_min)?;
                (v_s, v_i, Some(kappa))
            }
            (None, Some(vs), Some(vi)) => (
                conv.convert(vs, Dimension::Velocity, "waveguide.v_s")?,
                conv.convert(vi, Dimension::Velocity, "waveguide.v_i")?,
                None,
            ),
            (Some(_), _, _) => return Err(Error::config("waveguide.kappa", "give either kappa or both v_s and v_i, not both")),
            _ => return Err(Error::config("waveguide.v_s", "give either kappa or both v_s and v_i")),
        };
        let g_profile = match (&w.g_profile, &w.poling_period) {
            (Some(_), Some(_)) => {
                return Err(Error::config("waveguide.poling_period", "give either g_profile or poling_period, not both"))
            }
            (Some(segs), None) => segments(&mut conv, segs, "waveguide.g_profile")?,
            (None, Some(period)) => {
                let period = conv.convert(period, Dimension::Length, "waveguide.poling_period")?;
                Profile::periodic_poling(ell_min, ell_max, period)?
            }
            (None, None) => Profile::constant(ell_min, ell_max, 1.0)?,
        };
        let switch = |conv: &mut Converter, segs: &Option<Vec<SegmentConfig>>, field: &str| match segs {
            Some(s) => segments(conv, s, field),
            None => Profile::constant(ell_min, ell_max, 1.0),
        };
        let gamma_delta = match w.gamma_delta {
            ComplexConfig::Real(x) => c(x, 0.0),
            ComplexConfig::Complex { re, im } => c(re, im),
        };
        let waveguide = WaveguideSpec {
            v_s,
            v_i,
            v_p,
            ell_min,
            ell_max,
            gamma_delta,
            g_profile,
            gamma_xpm_s: w.gamma_xpm_s,
            gamma_xpm_i: w.gamma_xpm_i,
            h_s_profile: switch(&mut conv, &w.h_s_profile, "waveguide.h_s_profile")?,
            h_i_profile: switch(&mut conv, &w.h_i_profile, "waveguide.h_i_profile")?,
            order,
            carrier: w.carrier.clone(),
        };
        waveguide.validate()?;

        let span = optional(&mut conv, &self.grid.span, Dimension::Frequency, "grid.span", DEFAULT_SPAN_IN_SIGMAS * sigma)?;
        let grid = make_grid(span, self.grid.n_points)?;

        let solver = self.solver_choice(&pump, &waveguide)?;
        Ok(ResolvedRun {
            pump,
            envelope_grid,
            waveguide,
            grid,
            solver,
            kappa,
            scales,
            conversions: conv.into_log(),
        })
    }

    fn solver_choice(&self, pump: &PumpSpec<f64>, wg: &WaveguideSpec<f64>) -> Result<SolverChoice> {
        let s = &self.solver;
        match s.kind {
            SolverKind::Uniform => {
                if s.n_steps.is_some() || s.tolerance.is_some() || s.max_steps.is_some() {
                    return Err(Error::config("solver", "step settings only apply to the trotter solver"));
                }
                if !pump.zeta_p.is_zero() {
                    return Err(Error::SolverApplicability {
                        solver: "uniform".into(),
                        reason: "pump self-phase modulation makes the generator z-dependent; use the trotter solver".into(),
                    });
                }
                if !wg.is_uniform() {
                    return Err(Error::SolverApplicability {
                        solver: "uniform".into(),
                        reason: "nonlinearity or cross-phase profiles vary inside the region; use the trotter solver".into(),
                    });
                }
                Ok(SolverChoice::Uniform)
            }
            SolverKind::Trotter => match (s.n_steps, s.tolerance) {
                (Some(_), Some(_)) => Err(Error::config("solver.n_steps", "give either n_steps or tolerance, not both")),
                (Some(0), None) => Err(Error::config("solver.n_steps", "must be at least 1")),
                (Some(n), None) => Ok(SolverChoice::Trotter(StepControl::Fixed(n))),
                (None, tol) => {
                    let StepControl::Adaptive { tolerance, max_steps } = StepControl::default() else {
                        unreachable!()
                    };
                    let tolerance = tol.unwrap_or(tolerance);
                    if !(tolerance.is_finite() && tolerance > 0.0) {
                        return Err(Error::config("solver.tolerance", "must be positive"));
                    }
                    Ok(SolverChoice::Trotter(StepControl::Adaptive {
                        tolerance,
                        max_steps: s.max_steps.unwrap_or(max_steps),
                    }))
                }
            },
        }
    }
}

/// A symmetric group-velocity-matched top-hat configuration in internal
/// units: region `[-ell/2, ell/2]`, Gaussian pump of unit bandwidth centred
/// at the origin, optimal `kappa`.
pub fn symmetric_config(n_photons: f64, gamma: f64, ell: f64, n_points: usize) -> RunConfig {
    RunConfig {
        schema_version: SCHEMA_VERSION,
        scales: None,
        pump: PumpConfig {
            n_photons,
            order: OrderTag::Spdc,
            sigma: None,
            v_p: None,
            photon_energy: None,
            z0: None,
            t0: None,
            zeta_p: Vec::new(),
            envelope: None,
            envelope_grid: None,
        },
        waveguide: WaveguideConfig {
            ell_min: Quantity::internal(-ell / 2.0),
            ell_max: Quantity::internal(ell / 2.0),
            gamma_delta: ComplexConfig::Real(gamma),
            v_s: None,
            v_i: None,
            kappa: Some(KappaConfig::Named("optimal".into())),
            g_profile: None,
            poling_period: None,
            gamma_xpm_s: 0.0,
            gamma_xpm_i: 0.0,
            h_s_profile: None,
            h_i_profile: None,
            carrier: None,
        },
        grid: GridConfig { n_points, span: None },
        solver: SolverConfig::default(),
        outputs: OutputsConfig::default(),
    }
}
