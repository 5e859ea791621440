//! Classical undepleted pump.
//!
//! The pump envelope `Lambda(z)` at the reference time is sampled on a
//! uniform z-grid. Self-phase modulation only adds a z-dependent phase to
//! the envelope, so the pump energy distribution (and with it the spectrum
//! [`PumpField::energy_spectrum`]) never changes during propagation, while
//! the amplitude spectrum [`PumpField::beta_p`] acquires a z-dependence as
//! soon as `zeta_p` is non-zero.
//!
//! Internal units: detunings in units of the pump bandwidth scale, lengths in
//! `v_p / sigma` and energies in `hbar * omega_p` (see `units`). The formulas
//! below keep every parameter explicit so non-unit values also work.

use crate::error::{Error, Result};
use crate::linalg::{c, cis, cscale};
use crate::profile::Profile;
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Minimum envelope-grid coverage (in pulse widths each side) before a
/// truncation warning is recorded.
pub const MIN_COVERAGE_WIDTHS: f64 = 5.0;

/// Twin-beam generation process; the integer value is the power of the pump
/// amplitude entering the interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessOrder {
    /// Parametric down-conversion (second order, one pump photon).
    Spdc,
    /// Four-wave mixing (third order, two pump photons).
    Sfwm,
}

impl ProcessOrder {
    pub fn from_delta(delta: u32) -> Result<Self> {
        match delta {
            1 => Ok(ProcessOrder::Spdc),
            2 => Ok(ProcessOrder::Sfwm),
            other => Err(Error::config("delta", format!("process order must be 1 or 2, got {other}"))),
        }
    }

    pub fn delta(self) -> u32 {
        match self {
            ProcessOrder::Spdc => 1,
            ProcessOrder::Sfwm => 2,
        }
    }
}

/// Shape of the pump envelope at the reference time.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvelopeShape<T> {
    /// Gaussian of width `v_p / sigma` centred on `z0`.
    Gaussian,
    /// User-supplied samples on an ascending z-grid. Rescaled so that the
    /// envelope carries `n_photons`.
    Sampled { z: Vec<T>, values: Vec<Complex<T>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PumpSpec<T> {
    pub n_photons: T,
    pub sigma: T,
    pub z0: T,
    pub t0: T,
    pub v_p: T,
    /// Self-phase modulation strength.
    pub zeta_p: Profile<T>,
    pub order: ProcessOrder,
    /// `hbar * omega_p`; one in internal units.
    pub photon_energy: T,
    pub envelope: EnvelopeShape<T>,
}

impl<T: Scalar> PumpSpec<T> {
    /// Gaussian pump in internal units without self-phase modulation.
    pub fn gaussian(n_photons: T, sigma: T, v_p: T, order: ProcessOrder) -> Self {
        Self {
            n_photons,
            sigma,
            z0: T::zero(),
            t0: T::zero(),
            v_p,
            zeta_p: Profile::zero(),
            order,
            photon_energy: T::one(),
            envelope: EnvelopeShape::Gaussian,
        }
    }

    /// Spatial width `v_p / sigma` of the Gaussian envelope.
    pub fn width(&self) -> T {
        self.v_p / self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.n_photons, self.sigma, self.z0, self.t0, self.v_p, self.photon_energy];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("pump parameters".into()));
        }
        if self.n_photons < T::zero() {
            return Err(Error::config("pump.n_photons", "must be non-negative"));
        }
        if self.sigma <= T::zero() {
            return Err(Error::config("pump.sigma", "must be positive"));
        }
        if self.v_p <= T::zero() {
            return Err(Error::config("pump.v_p", "must be positive"));
        }
        if self.photon_energy <= T::zero() {
            return Err(Error::config("pump.photon_energy", "must be positive"));
        }
        if let EnvelopeShape::Sampled { z, values } = &self.envelope {
            if z.len() != values.len() || z.len() < 2 {
                return Err(Error::config("pump.envelope", "need at least two (z, value) samples of equal length"));
            }
            if z.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::config("pump.envelope.z", "sample positions must be strictly increasing"));
            }
            if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::NonFinite("pump envelope samples".into()));
            }
        }
        Ok(())
    }
}

/// Sampling of the envelope along z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeGrid {
    pub n_points: usize,
    /// Half-extent in pulse widths around the envelope centre.
    pub half_widths: f64,
}

impl Default for EnvelopeGrid {
    fn default() -> Self {
        Self {
            n_points: 2048,
            half_widths: 8.0,
        }
    }
}

/// Gaussian envelope samples together with any coverage warning.
#[derive(Clone, Debug)]
pub struct EnvelopeSamples<T> {
    pub values: Vec<Complex<T>>,
    pub warning: Option<String>,
}

/// `Lambda(z) = sqrt(N_p) (pi w^2)^(-1/4) exp(-(z - z0)^2 / (2 w^2))` with `w = v_p / sigma`.
pub fn gaussian_envelope<T: Scalar>(spec: &PumpSpec<T>, z_grid: &[T]) -> Result<EnvelopeSamples<T>> {
    spec.validate()?;
    if z_grid.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("envelope z-grid".into()));
    }
    let w = spec.width();
    let warning = match (z_grid.first(), z_grid.last()) {
        (Some(&lo), Some(&hi)) => {
            let need = w * T::lit(MIN_COVERAGE_WIDTHS);
            (lo > spec.z0 - need || hi < spec.z0 + need).then(|| {
                format!(
                    "envelope grid [{lo}, {hi}] covers fewer than {MIN_COVERAGE_WIDTHS} pulse widths around z0 = {}",
                    spec.z0
                )
            })
        }
        _ => None,
    };
    let values = z_grid
        .iter()
        .map(|&z| c(gaussian_amplitude(spec, z), T::zero()))
        .collect();
    Ok(EnvelopeSamples { values, warning })
}

fn gaussian_amplitude<T: Scalar>(spec: &PumpSpec<T>, z: T) -> T {
    if spec.n_photons == T::zero() {
        return T::zero();
    }
    let w = spec.width();
    let norm = spec.n_photons.sqrt() / (T::pi() * w * w).powf(T::lit(0.25));
    let x = (z - spec.z0) / w;
    norm * (-(x * x) * T::lit(0.5)).exp()
}

/// Trapezoid weights for ascending nodes.
fn trapezoid_weights<T: Scalar>(z: &[T]) -> Vec<T> {
    let n = z.len();
    let half = T::lit(0.5);
    (0..n)
        .map(|j| {
            let left = if j > 0 { z[j] - z[j - 1] } else { T::zero() };
            let right = if j + 1 < n { z[j + 1] - z[j] } else { T::zero() };
            (left + right) * half
        })
        .collect()
}

/// Pump with its envelope sampled and quadrature weights fixed.
#[derive(Clone, Debug)]
pub struct PumpField<T: Scalar> {
    spec: PumpSpec<T>,
    z: Vec<T>,
    weights: Vec<T>,
    envelope: Vec<Complex<T>>,
    intensity: Vec<T>,
    warnings: Vec<String>,
}

impl<T: Scalar> PumpField<T> {
    pub fn new(spec: PumpSpec<T>, grid: EnvelopeGrid) -> Result<Self> {
        spec.validate()?;
        let mut warnings = Vec::new();
        let (z, envelope) = match &spec.envelope {
            EnvelopeShape::Gaussian => {
                if grid.n_points < 3 || !(grid.half_widths > 0.0) {
                    return Err(Error::config("pump.envelope_grid", "envelope grid needs >= 3 points and a positive extent"));
                }
                let half = spec.width() * T::lit(grid.half_widths);
                let lo = spec.z0 - half;
                let step = half * T::lit(2.0) / T::from_count(grid.n_points - 1);
                let z: Vec<T> = (0..grid.n_points).map(|j| lo + step * T::from_count(j)).collect();
                let samples = gaussian_envelope(&spec, &z)?;
                warnings.extend(samples.warning);
                (z, samples.values)
            }
            EnvelopeShape::Sampled { z, values } => {
                let weights = trapezoid_weights(z);
                let raw: T = values
                    .iter()
                    .zip(&weights)
                    .fold(T::zero(), |acc, (v, w)| acc + v.norm_sqr() * *w);
                let values = if spec.n_photons == T::zero() {
                    vec![c(T::zero(), T::zero()); values.len()]
                } else if raw > T::zero() {
                    let s = (spec.n_photons / raw).sqrt();
                    values.iter().map(|v| cscale(*v, s)).collect()
                } else {
                    return Err(Error::config("pump.envelope", "sampled envelope is identically zero"));
                };
                (z.clone(), values)
            }
        };
        let weights = trapezoid_weights(&z);
        let intensity = envelope.iter().map(|v| v.norm_sqr()).collect();
        Ok(Self {
            spec,
            z,
            weights,
            envelope,
            intensity,
            warnings,
        })
    }

    pub fn spec(&self) -> &PumpSpec<T> {
        &self.spec
    }

    pub fn z_grid(&self) -> &[T] {
        &self.z
    }

    pub fn envelope(&self) -> &[Complex<T>] {
        &self.envelope
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn has_spm(&self) -> bool {
        !self.spec.zeta_p.is_zero()
    }

    /// Photon number by quadrature of `|Lambda|^2`.
    pub fn photon_number(&self) -> T {
        self.intensity
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (i, w)| acc + *i * *w)
    }

    /// Pump pulse energy `hbar omega_p N_p`.
    pub fn pulse_energy(&self) -> T {
        self.spec.photon_energy * self.spec.n_photons
    }

    /// `|Lambda(z)|^2` at an arbitrary position.
    pub fn intensity_at(&self, z: T) -> T {
        match self.spec.envelope {
            EnvelopeShape::Gaussian => {
                let a = gaussian_amplitude(&self.spec, z);
                a * a
            }
            EnvelopeShape::Sampled { .. } => {
                let zs = &self.z;
                if z < zs[0] || z > zs[zs.len() - 1] {
                    return T::zero();
                }
                let k = zs.partition_point(|&x| x <= z).clamp(1, zs.len() - 1);
                let t = (z - zs[k - 1]) / (zs[k] - zs[k - 1]);
                self.intensity[k - 1] * (T::one() - t) + self.intensity[k] * t
            }
        }
    }

    /// Nonlinear phase `theta(z, z') = |Lambda(z')|^2 int_{z'}^{z} zeta_p / v_p`.
    pub fn spm_phase(&self, z: T, z_prime: T) -> T {
        if self.spec.zeta_p.is_zero() {
            return T::zero();
        }
        self.intensity_at(z_prime) * self.spec.zeta_p.integral(z_prime, z) / self.spec.v_p
    }

    fn phase_factor(&self, nu: T) -> Complex<T> {
        if self.spec.t0 == T::zero() {
            c(T::one(), T::zero())
        } else {
            cis(nu * self.spec.t0)
        }
    }

    /// Quadrature integrand `w_j Lambda_j^delta exp(i delta theta(z, z_j))`.
    fn amplitude_integrand(&self, z: Option<T>) -> Vec<Complex<T>> {
        let delta = self.spec.order.delta();
        let spm = z.filter(|_| self.has_spm());
        self.envelope
            .iter()
            .zip(&self.weights)
            .zip(&self.z)
            .zip(&self.intensity)
            .map(|(((lam, w), zj), ij)| {
                let base = if delta == 1 { *lam } else { *lam * *lam };
                let phased = match spm {
                    Some(z) => {
                        let theta = *ij * self.spec.zeta_p.integral(*zj, z) / self.spec.v_p;
                        base * cis(theta * T::from_count(delta as usize))
                    }
                    None => base,
                };
                cscale(phased, *w)
            })
            .collect()
    }

    fn fourier(&self, integrand: &[Complex<T>], nus: &[T], prefactor: T) -> Vec<Complex<T>> {
        let inv_v = T::one() / self.spec.v_p;
        nus.iter()
            .map(|&nu| {
                let k = nu * inv_v;
                let sum = integrand
                    .iter()
                    .zip(&self.z)
                    .fold(c(T::zero(), T::zero()), |acc, (a, zj)| acc + *a * cis(-(k * *zj)));
                self.phase_factor(nu) * cscale(sum, prefactor)
            })
            .collect()
    }

    fn beta_prefactor(&self) -> T {
        let delta = T::from_count(self.spec.order.delta() as usize);
        self.spec.photon_energy.powf(delta * T::lit(0.5)) / (T::two_pi() * self.spec.v_p).sqrt()
    }

    /// Pump amplitude spectrum in the moving frame, `beta_p(z, nu)`, with `nu`
    /// the detuning from `delta * omega_p`.
    pub fn beta_p(&self, z: T, nus: &[T]) -> Vec<Complex<T>> {
        let integrand = self.amplitude_integrand(Some(z));
        self.fourier(&integrand, nus, self.beta_prefactor())
    }

    /// `beta_p` with the self-phase modulation phase switched off.
    pub fn beta_p_linear(&self, nus: &[T]) -> Vec<Complex<T>> {
        let integrand = self.amplitude_integrand(None);
        self.fourier(&integrand, nus, self.beta_prefactor())
    }

    /// Fourier transform of the pump energy distribution,
    /// `E_p(nu) = exp(i nu t0) hbar omega_p int |Lambda(z)|^2 exp(-i nu z / v_p) dz`.
    pub fn energy_spectrum(&self, nus: &[T]) -> Vec<Complex<T>> {
        let integrand: Vec<Complex<T>> = self
            .intensity
            .iter()
            .zip(&self.weights)
            .map(|(i, w)| c(*i * *w, T::zero()))
            .collect();
        self.fourier(&integrand, nus, self.spec.photon_energy)
    }
}
