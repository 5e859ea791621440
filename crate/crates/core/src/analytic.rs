//! Closed-form low-gain results, used as independent references for the
//! full solver.

use crate::coupling::{symmetric_gvm_velocities, WaveguideSpec};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{c, cis, cscale, CMatrix};
use crate::profile::Profile;
use crate::pump::PumpField;
use crate::scalar::Scalar;
use num_complex::Complex;

/// `sin(x) / x`, equal to one at the origin.
pub fn sinc<T: Scalar>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        // Taylor series; the truncation error is below 1e-18 here.
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Flat nonlinearity of strength `xi0` on a region of length `ell`, driven
/// by a Gaussian SPDC pump centred at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct LowGainConfig<T> {
    pub xi0: T,
    pub ell: T,
    pub sigma: T,
    pub n_photons: T,
    pub v_s: T,
    pub v_i: T,
    pub v_p: T,
}

impl<T: Scalar> LowGainConfig<T> {
    /// Velocities chosen for symmetric group-velocity matching with parameter `kappa`.
    pub fn symmetric(xi0: T, ell: T, sigma: T, n_photons: T, v_p: T, kappa: T) -> Result<Self> {
        let (v_s, v_i) = symmetric_gvm_velocities(v_p, kappa, ell)?;
        Ok(Self {
            xi0,
            ell,
            sigma,
            n_photons,
            v_s,
            v_i,
            v_p,
        })
    }

    /// The configuration matching a waveguide with coupling `gamma` (real)
    /// and pump photon energy `photon_energy`: `xi0 = gamma sqrt(v_s v_i v_p hbar omega_p)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_coupling(gamma: T, photon_energy: T, ell: T, sigma: T, n_photons: T, v_s: T, v_i: T, v_p: T) -> Self {
        Self {
            xi0: gamma * (v_s * v_i * v_p * photon_energy).sqrt(),
            ell,
            sigma,
            n_photons,
            v_s,
            v_i,
            v_p,
        }
    }

    pub fn delta_k_s(&self, nu: T) -> T {
        (T::one() / self.v_s - T::one() / self.v_p) * nu
    }

    pub fn delta_k_i(&self, nu: T) -> T {
        (T::one() / self.v_i - T::one() / self.v_p) * nu
    }

    /// `(ell / 2) (dk_s(nu_s) + dk_i(nu_i))`.
    pub fn sinc_argument(&self, nu_s: T, nu_i: T) -> T {
        self.ell * T::lit(0.5) * (self.delta_k_s(nu_s) + self.delta_k_i(nu_i))
    }
}

/// Perturbative joint spectral amplitude: pump envelope times phase matching.
pub fn lowgain_jsa<T: Scalar>(cfg: &LowGainConfig<T>, nu_s: T, nu_i: T) -> T {
    let pre = cfg.xi0 * cfg.n_photons.sqrt()
        / (T::two_pi() * cfg.v_s * cfg.v_i * cfg.v_p * cfg.sigma * T::pi().sqrt()).sqrt();
    let sum = nu_s + nu_i;
    let envelope = (-(sum * sum) / (T::lit(2.0) * cfg.sigma * cfg.sigma)).exp();
    pre * envelope * cfg.ell * sinc(cfg.sinc_argument(nu_s, nu_i))
}

/// [`lowgain_jsa`] on every `(nu_n, nu_m)` pair of the grid.
pub fn lowgain_jsa_grid<T: Scalar>(cfg: &LowGainConfig<T>, grid: &FrequencyGrid<T>) -> CMatrix<T> {
    let nu = grid.nu();
    CMatrix::from_fn(nu.len(), nu.len(), |n, m| c(lowgain_jsa(cfg, nu[n], nu[m]), T::zero()))
}

/// `Phi(dk) = int dz / sqrt(2 pi) exp(-i z dk) xi(z)` for `xi = xi0 * profile`.
pub fn phase_matching_phi<T: Scalar>(delta_k: T, profile: &Profile<T>, xi0: T) -> Complex<T> {
    let half = T::lit(0.5);
    let sum = profile.segments().iter().fold(c(T::zero(), T::zero()), |acc, s| {
        let length = s.end - s.start;
        let centre = (s.start + s.end) * half;
        acc + cscale(cis(-(delta_k * centre)), s.value * length * sinc(delta_k * length * half))
    });
    cscale(sum, xi0 / T::two_pi().sqrt())
}

/// First-order transfer kernel `U_si(nu, nu') = i gamma beta_p(nu + nu') Phi_g(dk_s(nu) + dk_i(nu'))`
/// in the input/output frame, with the self-phase modulation switched off.
pub fn first_order_propagator<T: Scalar>(
    pump: &PumpField<T>,
    wg: &WaveguideSpec<T>,
    grid: &FrequencyGrid<T>,
) -> Result<CMatrix<T>> {
    if pump.spec().order != wg.order {
        return Err(Error::config("waveguide.delta", "process order differs between pump and waveguide"));
    }
    let n = grid.n_points();
    let nu = grid.nu();
    let beta = pump.beta_p_linear(&grid.sum_nodes());
    let i_gamma = c(T::zero(), T::one()) * wg.gamma_delta;
    Ok(CMatrix::from_fn(n, n, |a, b| {
        let dk = wg.delta_k_s(nu[a]) + wg.delta_k_i(nu[b]);
        i_gamma * beta[a + b] * phase_matching_phi(dk, &wg.g_profile, T::one())
    }))
}

/// Symmetric group-velocity-matching parameter that makes the low-gain JSA
/// closest to separable for pump bandwidth `sigma`.
pub fn kappa_optimal<T: Scalar>(sigma: T) -> Result<T> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::config("pump.sigma", format!("must be positive, got {sigma}")));
    }
    Ok(T::lit(1.61) / (T::lit(1.13) * sigma))
}
