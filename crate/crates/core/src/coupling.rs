//! Discretised generator `Q(z)` of the twin-beam equations of motion.
//!
//! On the shared frequency grid the signal amplitudes `u` and idler
//! creation operators `v^dagger` obey `d/dz (u, v^dagger) = i Q(z) (u, v^dagger)`
//! with `Q = [[G, F], [-F^dagger, -H^dagger]]`. `F` carries the pump-driven
//! pair generation, `G` and `H` the walk-off relative to the pump and the
//! cross-phase modulation by the pump.

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{c, cscale, from_blocks, CMatrix};
use crate::profile::{Profile, ValueSet};
use crate::pump::{ProcessOrder, PumpField};
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Wavenumber mismatch `(1/v_j - 1/v_p) nu` of a twin beam against the pump.
pub fn delta_k<T: Scalar>(nu: T, v_j: T, v_p: T) -> T {
    (T::one() / v_j - T::one() / v_p) * nu
}

/// Carrier frequencies and wavenumbers, carried through to reports only.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CarrierInfo {
    pub omega_s: Option<f64>,
    pub omega_i: Option<f64>,
    pub omega_p: Option<f64>,
    pub k_s: Option<f64>,
    pub k_i: Option<f64>,
    pub k_p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveguideSpec<T> {
    pub v_s: T,
    pub v_i: T,
    pub v_p: T,
    pub ell_min: T,
    pub ell_max: T,
    pub gamma_delta: Complex<T>,
    /// Nonlinearity sign pattern, values in `{-1, 0, 1}`.
    pub g_profile: Profile<T>,
    pub gamma_xpm_s: T,
    pub gamma_xpm_i: T,
    /// Cross-phase switches, values in `{0, 1}`.
    pub h_s_profile: Profile<T>,
    pub h_i_profile: Profile<T>,
    pub order: ProcessOrder,
    pub carrier: Option<CarrierInfo>,
}

impl<T: Scalar> WaveguideSpec<T> {
    /// Uniform nonlinearity on `[ell_min, ell_max]`, no cross-phase modulation.
    pub fn top_hat(v_s: T, v_i: T, v_p: T, ell_min: T, ell_max: T, gamma_delta: T, order: ProcessOrder) -> Result<Self> {
        let spec = Self {
            v_s,
            v_i,
            v_p,
            ell_min,
            ell_max,
            gamma_delta: c(gamma_delta, T::zero()),
            g_profile: Profile::constant(ell_min, ell_max, T::one())?,
            gamma_xpm_s: T::zero(),
            gamma_xpm_i: T::zero(),
            h_s_profile: Profile::zero(),
            h_i_profile: Profile::zero(),
            order,
            carrier: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn length(&self) -> T {
        self.ell_max - self.ell_min
    }

    pub fn delta_k_s(&self, nu: T) -> T {
        delta_k(nu, self.v_s, self.v_p)
    }

    pub fn delta_k_i(&self, nu: T) -> T {
        delta_k(nu, self.v_i, self.v_p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("waveguide.v_s", self.v_s), ("waveguide.v_i", self.v_i), ("waveguide.v_p", self.v_p)] {
            if !v.is_finite() || v <= T::zero() {
                return Err(Error::config(name, format!("velocity must be positive and finite, got {v}")));
            }
        }
        if !(self.ell_min.is_finite() && self.ell_max.is_finite()) || self.ell_min >= self.ell_max {
            return Err(Error::config("waveguide.ell_max", "nonlinear region needs ell_min < ell_max"));
        }
        let couplings = [self.gamma_delta.re, self.gamma_delta.im, self.gamma_xpm_s, self.gamma_xpm_i];
        if couplings.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("waveguide couplings".into()));
        }
        self.g_profile.check_values(ValueSet::Sign, "waveguide.g_profile")?;
        self.h_s_profile.check_values(ValueSet::Switch, "waveguide.h_s_profile")?;
        self.h_i_profile.check_values(ValueSet::Switch, "waveguide.h_i_profile")?;
        Ok(())
    }

    /// True when every profile is a single constant over the nonlinear region.
    pub fn is_uniform(&self) -> bool {
        [&self.g_profile, &self.h_s_profile, &self.h_i_profile]
            .iter()
            .all(|p| p.is_constant_on(self.ell_min, self.ell_max))
    }
}

/// Signal and idler velocities giving `1/v_s - 1/v_p = -(1/v_i - 1/v_p) = 2 kappa / ell`.
pub fn symmetric_gvm_velocities<T: Scalar>(v_p: T, kappa: T, ell: T) -> Result<(T, T)> {
    if !(v_p > T::zero() && ell > T::zero()) {
        return Err(Error::config("waveguide.kappa", "symmetric matching needs positive v_p and length"));
    }
    let shift = T::lit(2.0) * kappa / ell;
    let inv_s = T::one() / v_p + shift;
    let inv_i = T::one() / v_p - shift;
    if !(inv_s > T::zero() && inv_i > T::zero()) {
        return Err(Error::config(
            "waveguide.kappa",
            format!("|kappa| = {} needs a region longer than 2 |kappa| v_p = {}", kappa.abs(), T::lit(2.0) * kappa.abs() * v_p),
        ));
    }
    Ok((T::one() / inv_s, T::one() / inv_i))
}

/// Complex function sampled on equally spaced nodes `first + k * step`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable<T: Scalar> {
    first: T,
    step: T,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> SpectrumTable<T> {
    pub fn new(first: T, step: T, values: Vec<Complex<T>>) -> Result<Self> {
        if !(step > T::zero()) || values.is_empty() {
            return Err(Error::config("spectrum_table", "need a positive step and at least one value"));
        }
        Ok(Self { first, step, values })
    }

    /// Pump amplitude spectrum on the sum nodes `nu_n + nu_m` of `grid`.
    pub fn beta_on_sums(pump: &PumpField<T>, z: Option<T>, grid: &FrequencyGrid<T>) -> Self {
        let nodes = grid.sum_nodes();
        let values = match z {
            Some(z) => pump.beta_p(z, &nodes),
            None => pump.beta_p_linear(&nodes),
        };
        Self {
            first: nodes[0],
            step: grid.delta_omega(),
            values,
        }
    }

    /// Pump energy spectrum on the difference nodes `nu_n - nu_m` of `grid`.
    pub fn energy_on_differences(pump: &PumpField<T>, grid: &FrequencyGrid<T>) -> Self {
        let nodes = grid.difference_nodes();
        Self {
            first: nodes[0],
            step: grid.delta_omega(),
            values: pump.energy_spectrum(&nodes),
        }
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    fn last(&self) -> T {
        self.first + self.step * T::from_count(self.values.len() - 1)
    }

    /// Values at `-2 span + k delta_omega`, `k = 0..2N-1`, which covers both
    /// the sum and the difference nodes of `grid`.
    fn aligned(&self, grid: &FrequencyGrid<T>) -> Result<&[Complex<T>]> {
        let need = T::lit(2.0) * grid.span();
        let count = 2 * grid.n_points() - 1;
        let tol = T::lit(1e-9) * grid.delta_omega();
        let offset = ((-need - self.first) / self.step).round();
        let ok = (self.step - grid.delta_omega()).abs() <= tol
            && self.first <= -need + tol
            && self.last() >= need - tol
            && ((self.first + offset * self.step) + need).abs() <= tol;
        if !ok {
            return Err(Error::Coverage {
                required_span: need.as_f64(),
            });
        }
        let k0 = offset.as_f64() as usize;
        Ok(&self.values[k0..k0 + count])
    }
}

/// The blocks of `Q(z)` together with `Q` itself.
#[derive(Clone, Debug)]
pub struct GeneratorMatrices<T: Scalar> {
    pub f: CMatrix<T>,
    pub g: CMatrix<T>,
    pub h: CMatrix<T>,
    pub q: CMatrix<T>,
}

impl<T: Scalar> GeneratorMatrices<T> {
    pub fn from_blocks(f: CMatrix<T>, g: CMatrix<T>, h: CMatrix<T>) -> Result<Self> {
        let n = f.nrows();
        for m in [&f, &g, &h] {
            if m.shape() != (n, n) {
                return Err(Error::dimension(format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
        }
        let q = assemble_q(&f, &g, &h);
        Ok(Self { f, g, h, q })
    }

    pub fn dimension(&self) -> usize {
        self.f.nrows()
    }
}

/// `Q = [[G, F], [-F^dagger, -H^dagger]]`.
pub fn assemble_q<T: Scalar>(f: &CMatrix<T>, g: &CMatrix<T>, h: &CMatrix<T>) -> CMatrix<T> {
    let lower_left = f.adjoint().map(|z| -z);
    let lower_right = h.adjoint().map(|z| -z);
    from_blocks(g, f, &lower_left, &lower_right)
}

/// `F_nm = gamma g(z) / sqrt(2 pi) beta_p(z, nu_n + nu_m) delta_omega` from a
/// table of `beta_p` values.
pub fn f_from_table<T: Scalar>(
    z: T,
    beta: &SpectrumTable<T>,
    wg: &WaveguideSpec<T>,
    grid: &FrequencyGrid<T>,
) -> Result<CMatrix<T>> {
    let n = grid.n_points();
    let sign = wg.g_profile.value_at(z);
    if sign == T::zero() || wg.gamma_delta == c(T::zero(), T::zero()) {
        // Coverage is still a precondition.
        beta.aligned(grid)?;
        return Ok(CMatrix::zeros(n, n));
    }
    let sums = beta.aligned(grid)?;
    let pre = wg.gamma_delta * (sign * grid.delta_omega() / T::two_pi().sqrt());
    // sum node index n + m sits at offset n + m in the aligned slice
    Ok(CMatrix::from_fn(n, n, |i, j| pre * sums[i + j]))
}

/// Walk-off plus cross-phase block for one beam. `conjugate` selects the
/// conjugated energy spectrum used by the idler block.
fn walkoff_block<T: Scalar>(
    dk: &[T],
    xpm: T,
    energy: &SpectrumTable<T>,
    grid: &FrequencyGrid<T>,
    conjugate: bool,
) -> Result<CMatrix<T>> {
    let n = grid.n_points();
    let diffs = energy.aligned(grid)?;
    let mut out = CMatrix::<T>::zeros(n, n);
    if xpm != T::zero() {
        let pre = xpm * grid.delta_omega() / T::two_pi();
        // Fill the upper triangle and mirror, so the block is exactly Hermitian.
        for j in 0..n {
            for i in 0..j {
                let e = diffs[i + n - 1 - j];
                let e = if conjugate { e.conj() } else { e };
                let v = cscale(e, pre);
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
            out[(j, j)] = c(cscale(diffs[n - 1], pre).re, T::zero());
        }
    }
    for (i, d) in dk.iter().enumerate() {
        out[(i, i)].re += *d;
    }
    Ok(out)
}

pub fn g_from_table<T: Scalar>(
    z: T,
    energy: &SpectrumTable<T>,
    wg: &WaveguideSpec<T>,
    grid: &FrequencyGrid<T>,
) -> Result<CMatrix<T>> {
    let dk: Vec<T> = grid.nu().iter().map(|&nu| wg.delta_k_s(nu)).collect();
    walkoff_block(&dk, wg.gamma_xpm_s * wg.h_s_profile.value_at(z), energy, grid, false)
}

pub fn h_from_table<T: Scalar>(
    z: T,
    energy: &SpectrumTable<T>,
    wg: &WaveguideSpec<T>,
    grid: &FrequencyGrid<T>,
) -> Result<CMatrix<T>> {
    let dk: Vec<T> = grid.nu().iter().map(|&nu| wg.delta_k_i(nu)).collect();
    walkoff_block(&dk, wg.gamma_xpm_i * wg.h_i_profile.value_at(z), energy, grid, true)
}

fn check_order<T: Scalar>(pump: &PumpField<T>, wg: &WaveguideSpec<T>) -> Result<()> {
    if pump.spec().order != wg.order {
        return Err(Error::config("waveguide.delta", "process order differs between pump and waveguide"));
    }
    Ok(())
}

pub fn assemble_f<T: Scalar>(z: T, pump: &PumpField<T>, wg: &WaveguideSpec<T>, grid: &FrequencyGrid<T>) -> Result<CMatrix<T>> {
    check_order(pump, wg)?;
    f_from_table(z, &SpectrumTable::beta_on_sums(pump, Some(z), grid), wg, grid)
}

pub fn assemble_g<T: Scalar>(z: T, pump: &PumpField<T>, wg: &WaveguideSpec<T>, grid: &FrequencyGrid<T>) -> Result<CMatrix<T>> {
    g_from_table(z, &SpectrumTable::energy_on_differences(pump, grid), wg, grid)
}

pub fn assemble_h<T: Scalar>(z: T, pump: &PumpField<T>, wg: &WaveguideSpec<T>, grid: &FrequencyGrid<T>) -> Result<CMatrix<T>> {
    h_from_table(z, &SpectrumTable::energy_on_differences(pump, grid), wg, grid)
}

/// Anything that can produce `Q(z)` on a fixed grid.
pub trait GeneratorSource<T: Scalar>: Sync {
    /// Number of frequency points `N`; `Q` is `2N x 2N`.
    fn dimension(&self) -> usize;

    fn generator(&self, z: T) -> Result<CMatrix<T>>;

    /// Positions in `(a, b)` where `Q(z)` jumps, ascending.
    fn breakpoints(&self, a: T, b: T) -> Vec<T>;

    /// True when `Q` takes a single value on `[a, b)`.
    fn is_constant_on(&self, a: T, b: T) -> bool;
}

/// Generator of a pumped waveguide, with the z-independent pieces cached.
#[derive(Clone, Debug)]
pub struct TwinBeamGenerator<T: Scalar> {
    pump: PumpField<T>,
    wg: WaveguideSpec<T>,
    grid: FrequencyGrid<T>,
    energy: SpectrumTable<T>,
    beta_linear: Option<SpectrumTable<T>>,
}

impl<T: Scalar> TwinBeamGenerator<T> {
    pub fn new(pump: PumpField<T>, wg: WaveguideSpec<T>, grid: FrequencyGrid<T>) -> Result<Self> {
        wg.validate()?;
        check_order(&pump, &wg)?;
        if (pump.spec().v_p - wg.v_p).abs() > T::lit(1e-12) * wg.v_p {
            return Err(Error::config("waveguide.v_p", "pump and waveguide disagree on the pump group velocity"));
        }
        let energy = SpectrumTable::energy_on_differences(&pump, &grid);
        let beta_linear = (!pump.has_spm()).then(|| SpectrumTable::beta_on_sums(&pump, None, &grid));
        Ok(Self {
            pump,
            wg,
            grid,
            energy,
            beta_linear,
        })
    }

    pub fn pump(&self) -> &PumpField<T> {
        &self.pump
    }

    pub fn waveguide(&self) -> &WaveguideSpec<T> {
        &self.wg
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    /// True when `Q` does not depend on z inside the nonlinear region.
    pub fn is_z_independent(&self) -> bool {
        self.beta_linear.is_some() && self.wg.is_uniform()
    }

    pub fn matrices(&self, z: T) -> Result<GeneratorMatrices<T>> {
        let f = match &self.beta_linear {
            Some(table) => f_from_table(z, table, &self.wg, &self.grid)?,
            None if self.wg.g_profile.value_at(z) == T::zero() => {
                CMatrix::zeros(self.grid.n_points(), self.grid.n_points())
            }
            None => f_from_table(z, &SpectrumTable::beta_on_sums(&self.pump, Some(z), &self.grid), &self.wg, &self.grid)?,
        };
        let g = g_from_table(z, &self.energy, &self.wg, &self.grid)?;
        let h = h_from_table(z, &self.energy, &self.wg, &self.grid)?;
        GeneratorMatrices::from_blocks(f, g, h)
    }
}

impl<T: Scalar> GeneratorSource<T> for TwinBeamGenerator<T> {
    fn dimension(&self) -> usize {
        self.grid.n_points()
    }

    fn generator(&self, z: T) -> Result<CMatrix<T>> {
        Ok(self.matrices(z)?.q)
    }

    fn breakpoints(&self, a: T, b: T) -> Vec<T> {
        let mut out: Vec<T> = [
            &self.wg.g_profile,
            &self.wg.h_s_profile,
            &self.wg.h_i_profile,
            &self.pump.spec().zeta_p,
        ]
        .iter()
        .flat_map(|p| p.breakpoints(a, b))
        .collect();
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        out
    }

    fn is_constant_on(&self, a: T, b: T) -> bool {
        let profiles_flat = [&self.wg.g_profile, &self.wg.h_s_profile, &self.wg.h_i_profile]
            .iter()
            .all(|p| p.is_constant_on(a, b));
        // With self-phase modulation F varies wherever the nonlinearity is on.
        let spm_free = self.beta_linear.is_some() || self.wg.g_profile.value_at(a) == T::zero();
        profiles_flat && spm_free
    }
}

/// Generator given by a closure, for tests and custom models.
pub struct FnGenerator<T, F> {
    dimension: usize,
    breakpoints: Vec<T>,
    constant: bool,
    f: F,
}

impl<T: Scalar, F: Fn(T) -> CMatrix<T> + Sync> FnGenerator<T, F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self {
            dimension,
            breakpoints: Vec::new(),
            constant: false,
            f,
        }
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<T>) -> Self {
        breakpoints.sort_by(|x, y| x.partial_cmp(y).unwrap());
        self.breakpoints = breakpoints;
        self
    }

    /// Declare the closure z-independent.
    pub fn constant(mut self) -> Self {
        self.constant = true;
        self
    }
}

impl<T: Scalar, F: Fn(T) -> CMatrix<T> + Sync> GeneratorSource<T> for FnGenerator<T, F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn generator(&self, z: T) -> Result<CMatrix<T>> {
        let q = (self.f)(z);
        if q.shape() != (2 * self.dimension, 2 * self.dimension) {
            return Err(Error::dimension(
                format!("{0}x{0}", 2 * self.dimension),
                format!("{}x{}", q.nrows(), q.ncols()),
            ));
        }
        Ok(q)
    }

    fn breakpoints(&self, a: T, b: T) -> Vec<T> {
        self.breakpoints.iter().copied().filter(|&p| p > a && p < b).collect()
    }

    fn is_constant_on(&self, _a: T, _b: T) -> bool {
        self.constant
    }
}

/// Optical parameters of one beam at its carrier frequency (SI units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamOptics {
    /// Angular frequency, rad/s.
    pub omega: f64,
    pub n: f64,
    /// Group velocity, m/s.
    pub v_group: f64,
    /// Phase velocity, m/s.
    pub v_phase: f64,
}

/// Inputs to [`estimate_gamma`] (SI units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateInputs {
    /// Effective transverse area, m^2.
    pub area: f64,
    /// Refractive index entering the nonlinear tensor conversion.
    pub n_nonlinear: f64,
    pub pump: BeamOptics,
    pub signal: BeamOptics,
    pub idler: BeamOptics,
    /// Second-order susceptibility magnitude, m/V.
    #[serde(default)]
    pub chi2: Option<f64>,
    /// Third-order susceptibility magnitude, m^2/V^2.
    #[serde(default)]
    pub chi3: Option<f64>,
}

/// Order-of-magnitude couplings in SI units.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub xi_1: Option<f64>,
    pub gamma_1: Option<f64>,
    pub xi_2: Option<f64>,
    pub gamma_2: Option<f64>,
    pub zeta_p: Option<f64>,
    pub zeta_s: Option<f64>,
    pub zeta_i: Option<f64>,
    pub gamma_xpm_s: Option<f64>,
    pub gamma_xpm_i: Option<f64>,
}

pub const EPSILON_0: f64 = 8.8541878128e-12;
pub const HBAR: f64 = 1.054571817e-34;

/// Coupling constants under the flat-mode approximation: every mode field
/// is constant over the area `A` and vanishes outside, so each overlap
/// integral reduces to `A` times a product of field magnitudes
/// `|d| = sqrt(eps0 n^2 v_g / (v_ph A))`.
pub fn estimate_gamma(inputs: &EstimateInputs) -> Result<GammaEstimate> {
    let positive = |name: &str, x: f64| -> Result<()> {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(Error::config(name, format!("must be positive and finite, got {x}")))
        }
    };
    positive("area", inputs.area)?;
    positive("n_nonlinear", inputs.n_nonlinear)?;
    for (label, b) in [("pump", &inputs.pump), ("signal", &inputs.signal), ("idler", &inputs.idler)] {
        positive(&format!("{label}.omega"), b.omega)?;
        positive(&format!("{label}.n"), b.n)?;
        positive(&format!("{label}.v_group"), b.v_group)?;
        positive(&format!("{label}.v_phase"), b.v_phase)?;
    }
    if inputs.chi2.is_none() && inputs.chi3.is_none() {
        return Err(Error::config("chi2", "at least one of chi2 or chi3 is required"));
    }
    if let Some(x) = inputs.chi2 {
        positive("chi2", x)?;
    }
    if let Some(x) = inputs.chi3 {
        positive("chi3", x)?;
    }

    let a = inputs.area;
    let field = |b: &BeamOptics| (EPSILON_0 * b.n * b.n * b.v_group / (b.v_phase * a)).sqrt();
    let (p, s, i) = (&inputs.pump, &inputs.signal, &inputs.idler);
    let (dp, ds, di) = (field(p), field(s), field(i));
    let n = inputs.n_nonlinear;
    let mut out = GammaEstimate::default();

    if let Some(chi2) = inputs.chi2 {
        let gamma2 = chi2 / (EPSILON_0 * n.powi(6));
        let xi = 2.0 / (EPSILON_0 * HBAR) * (HBAR.powi(3) * i.omega * s.omega * p.omega / 8.0).sqrt() * gamma2 * a * di * ds * dp;
        out.xi_1 = Some(xi);
        out.gamma_1 = Some(xi / (p.v_group * s.v_group * i.v_group * HBAR * p.omega).sqrt());
    }
    if let Some(chi3) = inputs.chi3 {
        let gamma3 = chi3 / (EPSILON_0 * EPSILON_0 * n.powi(8));
        let pre = 3.0 / (EPSILON_0 * HBAR);
        let ep = HBAR * p.omega / 2.0;
        let xi2 = pre * (HBAR * (s.omega * i.omega).sqrt() / 2.0) * ep * gamma3 * a * ds * di * dp * dp;
        out.xi_2 = Some(xi2);
        out.gamma_2 = Some(xi2 / (p.v_group * s.v_group * i.v_group * (HBAR * p.omega).powi(2)).sqrt());
        out.zeta_p = Some(pre * ep * ep * gamma3 * a * dp.powi(4));
        let zeta_j = |b: &BeamOptics, d: f64| 2.0 * pre * (HBAR * b.omega / 2.0) * ep * gamma3 * a * dp * dp * d * d;
        let (zs, zi) = (zeta_j(s, ds), zeta_j(i, di));
        out.zeta_s = Some(zs);
        out.zeta_i = Some(zi);
        out.gamma_xpm_s = Some(zs / (p.v_group * s.v_group * HBAR * p.omega));
        out.gamma_xpm_i = Some(zi / (p.v_group * i.v_group * HBAR * p.omega));
    }
    Ok(out)
}
