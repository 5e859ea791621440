//! Joint Schmidt decomposition of a propagator and the twin-beam
//! observables derived from it.
//!
//! With kernels `U(nu, nu') = block / delta_omega` the four blocks share one
//! set of squeezing parameters `r_l` and orthonormal modes:
//!
//! ```text
//! U_ss       = sum_l cosh r_l  rho_s(nu)       conj(tau_s(nu'))
//! U_si       = sum_l sinh r_l  rho_s(nu)       tau_i(nu')
//! conj(U_ii) = sum_l cosh r_l  conj(rho_i(nu)) tau_i(nu')
//! conj(U_is) = sum_l sinh r_l  conj(rho_i(nu)) conj(tau_s(nu'))
//! ```
//!
//! The SVD of `U_si` fixes `rho_s`, `tau_i` and `sinh r_l`; the other two
//! mode sets follow from `U_ss` and `U_ii` by projection. Because they are
//! derived from the same singular vectors, degenerate clusters need no
//! special treatment.

use crate::error::{Error, Result};
use crate::linalg::{c, cabs, carg, cis, conj, cscale, diag_right, identity_residual, matmul, max_abs_diff, max_norm, CMatrix};
use crate::propagator::{check_su11, Propagator};
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::Serialize;

/// SU(1,1) residual a double-precision propagator must meet before it is
/// decomposed.
pub const DECOMPOSE_SU11_TOLERANCE: f64 = 1e-8;

/// The gate for `T`: [`DECOMPOSE_SU11_TOLERANCE`], loosened to `1e4` machine
/// epsilons for types that cannot reach it.
pub fn decompose_su11_tolerance<T: Scalar>() -> f64 {
    DECOMPOSE_SU11_TOLERANCE.max(1e4 * T::EPSILON)
}

/// Modes with `r_l <= OCCUPIED_FRACTION * r_max` are reported as empty.
pub const OCCUPIED_FRACTION: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct TwinBeamDecomposition<T: Scalar> {
    r: Vec<T>,
    rho_s: CMatrix<T>,
    rho_i: CMatrix<T>,
    tau_s: CMatrix<T>,
    tau_i: CMatrix<T>,
    delta_omega: T,
}

/// Unit-norm columns of a decomposition, `sqrt(delta_omega) * mode`.
struct UnitModes<T: Scalar> {
    sinh: Vec<T>,
    rho_s: CMatrix<T>,
    rho_i: CMatrix<T>,
    tau_s: CMatrix<T>,
    tau_i: CMatrix<T>,
}

fn unit_modes<T: Scalar>(prop: &Propagator<T>) -> Result<UnitModes<T>> {
    let n = prop.n();
    let u_si = prop.u_si();
    let u_ss = prop.u_ss();
    let u_ii = prop.u_ii();

    let (left, sinh, right_h) = if max_norm(&u_si) == T::zero() {
        (CMatrix::identity(n, n), vec![T::zero(); n], CMatrix::identity(n, n))
    } else {
        let svd = u_si.svd(true, true);
        let u = svd.u.ok_or_else(|| Error::Singular("SVD of U_si".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::Singular("SVD of U_si".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
        let left = CMatrix::from_fn(n, n, |i, l| u[(i, order[l])]);
        let right_h = CMatrix::from_fn(n, n, |l, j| v_t[(order[l], j)]);
        let sinh = order.iter().map(|&k| svd.singular_values[k]).collect();
        (left, sinh, right_h)
    };

    let inv_cosh: Vec<Complex<T>> = sinh.iter().map(|&s: &T| c(T::one() / (T::one() + s * s).sqrt(), T::zero())).collect();
    let rho_s = left;
    let tau_i = right_h.transpose();
    let tau_s = diag_right(&matmul(&u_ss.adjoint(), &rho_s), &inv_cosh);
    let rho_i = diag_right(&matmul(&u_ii, &tau_i), &inv_cosh);
    let mut modes = UnitModes {
        sinh,
        rho_s,
        rho_i,
        tau_s,
        tau_i,
    };
    fix_gauge(&mut modes);
    Ok(modes)
}

/// Rotate each mode so that the first significant component of `rho_s` is
/// real and positive. `tau_s` co-rotates, `rho_i` and `tau_i` counter-rotate,
/// which leaves every block unchanged.
fn fix_gauge<T: Scalar>(m: &mut UnitModes<T>) {
    let n = m.rho_s.nrows();
    for l in 0..m.rho_s.ncols() {
        let col = m.rho_s.column(l);
        let peak = col.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)));
        if peak == T::zero() {
            continue;
        }
        let k = (0..n).find(|&k| cabs(col[k]) >= peak * T::lit(0.5)).unwrap();
        let phase = cis(-carg(col[k]));
        let anti = phase.conj();
        m.rho_s.column_mut(l).iter_mut().for_each(|z| *z *= phase);
        m.tau_s.column_mut(l).iter_mut().for_each(|z| *z *= phase);
        m.rho_i.column_mut(l).iter_mut().for_each(|z| *z *= anti);
        m.tau_i.column_mut(l).iter_mut().for_each(|z| *z *= anti);
    }
}

/// Decompose a propagator that passes the SU(1,1) check at
/// [`decompose_su11_tolerance`].
pub fn schmidt_decompose<T: Scalar>(prop: &Propagator<T>, delta_omega: T) -> Result<TwinBeamDecomposition<T>> {
    if !(delta_omega > T::zero()) {
        return Err(Error::config("grid.delta_omega", "must be positive"));
    }
    let tolerance = decompose_su11_tolerance::<T>();
    let report = check_su11(prop, tolerance);
    if !report.passed {
        return Err(Error::Su11 {
            residual: report.worst(),
            tolerance,
        });
    }
    let m = unit_modes(prop)?;
    let norm = T::one() / delta_omega.sqrt();
    let to_kernel = |x: &CMatrix<T>| x.map(|z| cscale(z, norm));
    Ok(TwinBeamDecomposition {
        r: m.sinh.iter().map(|&s| s.asinh()).collect(),
        rho_s: to_kernel(&m.rho_s),
        rho_i: to_kernel(&m.rho_i),
        tau_s: to_kernel(&m.tau_s),
        tau_i: to_kernel(&m.tau_i),
        delta_omega,
    })
}

/// Residuals of a decomposition against the propagator it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionResiduals {
    /// Max-norm error of the four rebuilt blocks.
    pub reconstruction: f64,
    /// `max |delta_omega X^dagger X - I|` over the four mode sets.
    pub orthonormality: f64,
    /// `max |sigma_l(U_ss) - sqrt(1 + sigma_l(U_si)^2)|` from independent SVDs.
    pub pairing: f64,
    /// `max |sigma_l(delta_omega M) - sinh(2 r_l) / 2|`.
    pub moment_singular_values: f64,
}

impl<T: Scalar> TwinBeamDecomposition<T> {
    /// Squeezing parameters, descending.
    pub fn r(&self) -> &[T] {
        &self.r
    }

    pub fn rho_s(&self) -> &CMatrix<T> {
        &self.rho_s
    }

    pub fn rho_i(&self) -> &CMatrix<T> {
        &self.rho_i
    }

    pub fn tau_s(&self) -> &CMatrix<T> {
        &self.tau_s
    }

    pub fn tau_i(&self) -> &CMatrix<T> {
        &self.tau_i
    }

    pub fn delta_omega(&self) -> T {
        self.delta_omega
    }

    /// Test hook: rescale the stored grid spacing without touching the
    /// modes, producing an inconsistent decomposition.
    #[doc(hidden)]
    pub fn perturb_delta_omega(&mut self, factor: T) {
        self.delta_omega *= factor;
    }

    /// Number of modes with `r_l > OCCUPIED_FRACTION * r_max`.
    pub fn occupied(&self) -> usize {
        let r_max = self.r.first().copied().unwrap_or(T::zero());
        if r_max == T::zero() {
            return 0;
        }
        self.r.iter().filter(|&&r| r > r_max * T::lit(OCCUPIED_FRACTION)).count()
    }

    fn weighted(&self, f: impl Fn(T) -> T) -> Vec<Complex<T>> {
        self.r.iter().map(|&r| c(f(r), T::zero())).collect()
    }

    /// `sum_l w_l x_l(nu) y_l(nu')` scaled into a grid block.
    fn outer(&self, x: &CMatrix<T>, w: &[Complex<T>], y: &CMatrix<T>) -> CMatrix<T> {
        matmul(&diag_right(x, w), y).map(|z| cscale(z, self.delta_omega))
    }

    /// Rebuild the undressed-layout propagator from the modes.
    pub fn reconstruct(&self, z0: T, z1: T) -> Result<Propagator<T>> {
        let cosh = self.weighted(|r| r.cosh());
        let sinh = self.weighted(|r| r.sinh());
        let ss = self.outer(&self.rho_s, &cosh, &self.tau_s.adjoint());
        let si = self.outer(&self.rho_s, &sinh, &self.tau_i.transpose());
        let rho_i_conj = conj(&self.rho_i);
        let ii = self.outer(&rho_i_conj, &cosh, &self.tau_i.transpose());
        let is = self.outer(&rho_i_conj, &sinh, &self.tau_s.adjoint());
        Propagator::from_matrix(crate::linalg::from_blocks(&ss, &si, &is, &ii), z0, z1)
    }

    /// Joint spectral amplitude `J = sum_l r_l rho_s(nu) rho_i(nu')` on the grid.
    pub fn jsa(&self) -> CMatrix<T> {
        let w = self.weighted(|r| r);
        matmul(&diag_right(&self.rho_s, &w), &self.rho_i.transpose())
    }

    /// `M = sum_l sinh(2 r_l) / 2 rho_s(nu) rho_i(nu')` from the modes.
    pub fn moment_from_modes(&self) -> CMatrix<T> {
        let w = self.weighted(|r| (r + r).sinh() * T::lit(0.5));
        matmul(&diag_right(&self.rho_s, &w), &self.rho_i.transpose())
    }

    pub fn residuals(&self, prop: &Propagator<T>) -> Result<DecompositionResiduals> {
        let rebuilt = self.reconstruct(prop.z0(), prop.z1())?;
        let reconstruction = max_abs_diff(rebuilt.matrix(), prop.matrix()).as_f64();
        let gram = |x: &CMatrix<T>| identity_residual(&matmul(&x.adjoint(), x).map(|z| cscale(z, self.delta_omega)));
        let orthonormality = [&self.rho_s, &self.rho_i, &self.tau_s, &self.tau_i]
            .iter()
            .map(|x| gram(x).as_f64())
            .fold(0.0, f64::max);

        let sorted_sv = |m: CMatrix<T>| {
            let mut s: Vec<f64> = m.singular_values().iter().map(|x| x.as_f64()).collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            s
        };
        let sinh = sorted_sv(prop.u_si());
        let cosh = sorted_sv(prop.u_ss());
        let pairing = sinh
            .iter()
            .zip(&cosh)
            .map(|(s, c)| (c - (1.0 + s * s).sqrt()).abs())
            .fold(0.0, f64::max);

        let moment = sorted_sv(moment_matrix(prop, self.delta_omega).map(|z| cscale(z, self.delta_omega)));
        let moment_singular_values = moment
            .iter()
            .zip(&self.r)
            .map(|(m, r)| (m - (2.0 * r.as_f64()).sinh() / 2.0).abs())
            .fold(0.0, f64::max);
        Ok(DecompositionResiduals {
            reconstruction,
            orthonormality,
            pairing,
            moment_singular_values,
        })
    }

    pub fn observables(&self) -> TwinBeamObservables<T> {
        let lambda: Vec<f64> = self.r.iter().map(|r| r.as_f64().sinh().powi(2)).collect();
        let mean: f64 = lambda.iter().sum();
        let (schmidt_number, vacuum) = participation(&lambda);
        let r2: Vec<f64> = self.r.iter().map(|r| r.as_f64().powi(2)).collect();
        let (jsa_schmidt_number, _) = participation(&r2);
        TwinBeamObservables {
            jsa: self.jsa(),
            moment: self.moment_from_modes(),
            mean_n_signal: mean,
            mean_n_idler: mean,
            schmidt_number,
            jsa_schmidt_number,
            vacuum,
            occupied: self.occupied(),
        }
    }
}

/// `(sum w)^2 / sum w^2`, or `(1, true)` when every weight vanishes.
pub fn participation(weights: &[f64]) -> (f64, bool) {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        (1.0, true)
    } else {
        (s * s / s2, false)
    }
}

#[derive(Clone, Debug)]
pub struct TwinBeamObservables<T: Scalar> {
    pub jsa: CMatrix<T>,
    pub moment: CMatrix<T>,
    pub mean_n_signal: f64,
    pub mean_n_idler: f64,
    /// Schmidt number from the modal photon numbers `sinh^2 r_l`.
    pub schmidt_number: f64,
    /// Schmidt number of the JSA itself, from the weights `r_l^2`.
    pub jsa_schmidt_number: f64,
    /// True when all `r_l` vanish; the Schmidt numbers are then reported as 1.
    pub vacuum: bool,
    pub occupied: usize,
}

/// Signal-idler moment `M(nu, nu') = <a_s(nu) a_i(nu')>` from the blocks,
/// `U_si U_ii^T / delta_omega`.
pub fn moment_matrix<T: Scalar>(prop: &Propagator<T>, delta_omega: T) -> CMatrix<T> {
    let inv = T::one() / delta_omega;
    matmul(&prop.u_si(), &prop.u_ii_conj().adjoint()).map(|z| cscale(z, inv))
}

/// The same moment written as `U_ii U_si^T / delta_omega`, i.e. with the
/// two frequency arguments exchanged.
pub fn moment_matrix_transposed_form<T: Scalar>(prop: &Propagator<T>, delta_omega: T) -> CMatrix<T> {
    moment_matrix(prop, delta_omega).transpose()
}

/// Photon numbers from the traces `sum |U_si|^2` and `sum |U_is|^2`.
pub fn mean_photons_from_blocks<T: Scalar>(prop: &Propagator<T>) -> (f64, f64) {
    let total = |m: CMatrix<T>| m.iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>();
    (total(prop.u_si()), total(prop.u_is_conj()))
}

/// Singular values of a kernel sampled on a grid, as an operator on
/// `L^2` (i.e. of `delta_omega * kernel`), descending.
pub fn kernel_singular_values<T: Scalar>(kernel: &CMatrix<T>, delta_omega: T) -> Vec<f64> {
    let mut s: Vec<f64> = kernel
        .map(|z| cscale(z, delta_omega))
        .singular_values()
        .iter()
        .map(|x| x.as_f64())
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Schmidt number of a kernel, from its squared singular values.
pub fn kernel_schmidt_number<T: Scalar>(kernel: &CMatrix<T>, delta_omega: T) -> f64 {
    let w: Vec<f64> = kernel_singular_values(kernel, delta_omega).iter().map(|s| s * s).collect();
    participation(&w).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{GeneratorMatrices, TwinBeamGenerator, WaveguideSpec};
    use crate::grid::make_grid;
    use crate::linalg::frobenius;
    use crate::propagator::propagate_uniform;
    use crate::pump::{EnvelopeGrid, ProcessOrder, PumpField, PumpSpec};
    use proptest::prelude::*;

    fn physical_propagator(n: usize, gamma: f64) -> (Propagator<f64>, f64) {
        let grid = make_grid(4.0, n).unwrap();
        let pump = PumpField::new(PumpSpec::gaussian(1.0, 1.0, 1.0, ProcessOrder::Spdc), EnvelopeGrid::default()).unwrap();
        let wg = WaveguideSpec::top_hat(0.8, 1.3, 1.0, -1.0, 1.0, gamma, ProcessOrder::Spdc).unwrap();
        let gen = TwinBeamGenerator::new(pump, wg, grid.clone()).unwrap();
        let p = propagate_uniform(&gen.matrices(0.0).unwrap(), -1.0, 1.0).unwrap();
        (p, grid.delta_omega())
    }

    #[test]
    fn identity_gives_vacuum_on_grid_basis() {
        let p = Propagator::<f64>::identity(4, 0.0);
        let d = schmidt_decompose(&p, 0.5).unwrap();
        assert!(d.r().iter().all(|&r| r == 0.0));
        let expect = CMatrix::<f64>::identity(4, 4).map(|z| z / 0.5f64.sqrt());
        assert!(max_abs_diff(d.rho_s(), &expect) < 1e-15);
        let obs = d.observables();
        assert_eq!(obs.mean_n_signal, 0.0);
        assert!(obs.vacuum);
        assert_eq!(obs.schmidt_number, 1.0);
        assert_eq!(max_norm(&obs.jsa), 0.0);
        assert_eq!(d.occupied(), 0);
    }

    #[test]
    fn single_mode_toy() {
        let z = CMatrix::<f64>::zeros(1, 1);
        let g = 0.8;
        let m = GeneratorMatrices::from_blocks(CMatrix::from_element(1, 1, c(g, 0.0)), z.clone(), z).unwrap();
        let p = propagate_uniform(&m, 0.0, 1.5).unwrap();
        let d = schmidt_decompose(&p, 1.0).unwrap();
        assert!((d.r()[0] - g * 1.5).abs() < 1e-13);
        assert_eq!(d.occupied(), 1);
    }

    #[test]
    fn participation_examples() {
        let s = 1.0f64.sinh().powi(2);
        let (k, vac) = participation(&[s, s]);
        assert!((k - 2.0).abs() < 1e-15 && !vac);
        assert!((2.0 * s - 2.7622).abs() < 1e-4);
        assert_eq!(participation(&[0.0, 0.0]), (1.0, true));
    }

    #[test]
    fn refuses_non_su11_input() {
        let (p, dw) = physical_propagator(8, 1.0);
        let mut u = p.into_matrix();
        u[(0, 0)] += c(1e-4, 0.0);
        let bad = Propagator::from_matrix(u, -1.0, 1.0).unwrap();
        assert!(matches!(schmidt_decompose(&bad, dw), Err(Error::Su11 { .. })));
    }

    #[test]
    fn decomposition_consistency_at_high_gain() {
        let (p, dw) = physical_propagator(24, 2.5);
        let d = schmidt_decompose(&p, dw).unwrap();
        assert!(d.r()[0] > 1.0, "r1 = {}", d.r()[0]);
        let res = d.residuals(&p).unwrap();
        assert!(res.reconstruction <= 1e-9, "{res:?}");
        assert!(res.orthonormality <= 1e-10, "{res:?}");
        assert!(res.pairing <= 1e-9, "{res:?}");
        assert!(res.moment_singular_values <= 1e-9, "{res:?}");
        assert!(d.r().windows(2).all(|w| w[0] >= w[1]));

        // rho_s^dagger U_ss tau_s is real positive diagonal
        let proj = matmul(&matmul(&d.rho_s().adjoint(), &p.u_ss()), d.tau_s()).map(|z| z * dw);
        for l in 0..24 {
            assert!((proj[(l, l)] - c(d.r()[l].cosh(), 0.0)).norm() < 1e-9);
        }

        // moment from blocks equals the Schmidt form; the exchanged form is its transpose
        let from_blocks = moment_matrix(&p, dw);
        let from_modes = d.moment_from_modes();
        assert!(max_abs_diff(&from_blocks, &from_modes) <= 1e-9 * max_norm(&from_modes).max(1.0));
        assert!(max_abs_diff(&moment_matrix_transposed_form(&p, dw), &from_modes.transpose()) <= 1e-9);

        // photon-number trace identity
        let obs = d.observables();
        let (ns, ni) = mean_photons_from_blocks(&p);
        assert!((ns - obs.mean_n_signal).abs() <= 1e-9 * obs.mean_n_signal);
        assert!((ni - obs.mean_n_idler).abs() <= 1e-9 * obs.mean_n_idler);

        // |J|_F^2 delta_omega^2 = sum r^2
        let sum_r2: f64 = d.r().iter().map(|r| r * r).sum();
        assert!((frobenius(&obs.jsa).powi(2) * dw * dw - sum_r2).abs() < 1e-10 * sum_r2);
    }

    #[test]
    fn mode_completeness_at_full_rank() {
        let (p, dw) = physical_propagator(12, 1.0);
        let d = schmidt_decompose(&p, dw).unwrap();
        let outer = matmul(d.rho_s(), &d.rho_s().adjoint()).map(|z| z * dw);
        assert!(identity_residual(&outer) < 1e-12);
    }

    #[test]
    fn fault_injection_breaks_orthonormality() {
        let (p, dw) = physical_propagator(10, 1.0);
        let mut d = schmidt_decompose(&p, dw).unwrap();
        d.perturb_delta_omega(1.01);
        let res = d.residuals(&p).unwrap();
        assert!(res.orthonormality > 1e-3);
    }

    #[test]
    fn zero_pump_moment_vanishes() {
        let (p, dw) = physical_propagator(8, 0.0);
        assert_eq!(max_norm(&moment_matrix(&p, dw)), 0.0);
        let d = schmidt_decompose(&p, dw).unwrap();
        assert!(d.observables().vacuum);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        /// Opposite phases on paired mode functions leave J, M, N and K alone.
        #[test]
        fn observables_are_gauge_invariant(seed in 0u64..1000) {
            let (p, dw) = physical_propagator(10, 1.2);
            let d = schmidt_decompose(&p, dw).unwrap();
            let before = d.observables();
            let mut rotated = d.clone();
            for l in 0..10 {
                let phase = cis(((seed as f64) * 0.731 + l as f64 * 1.37).sin() * 3.0);
                rotated.rho_s.column_mut(l).iter_mut().for_each(|z| *z *= phase);
                rotated.tau_s.column_mut(l).iter_mut().for_each(|z| *z *= phase);
                rotated.rho_i.column_mut(l).iter_mut().for_each(|z| *z *= phase.conj());
                rotated.tau_i.column_mut(l).iter_mut().for_each(|z| *z *= phase.conj());
            }
            let after = rotated.observables();
            prop_assert!(max_abs_diff(&before.jsa, &after.jsa) < 1e-12);
            prop_assert!(max_abs_diff(&before.moment, &after.moment) < 1e-12);
            prop_assert_eq!(before.mean_n_signal, after.mean_n_signal);
            prop_assert_eq!(before.schmidt_number, after.schmidt_number);
            let res = rotated.residuals(&p).unwrap();
            prop_assert!(res.reconstruction < 1e-9);
        }
    }

    #[test]
    fn kernel_schmidt_number_of_product_is_one() {
        let a: Vec<f64> = (0..9).map(|k| (-(k as f64 - 4.0).powi(2) / 4.0).exp()).collect();
        let b: Vec<f64> = (0..9).map(|k| (k as f64 * 0.3).cos()).collect();
        let kernel = CMatrix::from_fn(9, 9, |i, j| c(a[i] * b[j], 0.0));
        assert!((kernel_schmidt_number(&kernel, 0.1) - 1.0).abs() < 1e-12);
    }
}
