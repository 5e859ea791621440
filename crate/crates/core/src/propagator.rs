//! Spatial propagator `U(z1, z0)` of the discretised twin-beam equations.
//!
//! `U` maps `(u, v^dagger)` at `z0` to `z1` and has the block layout
//! `[[U_ss, U_si], [conj(U_is), conj(U_ii)]]`. For a z-independent generator
//! it is a single exponential `exp(i (z1 - z0) Q)`; otherwise it is the
//! midpoint product of slice exponentials, ordered with later slices on the
//! left.

use crate::coupling::{GeneratorMatrices, GeneratorSource, WaveguideSpec};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{
    block, c, cis, conj, diag_left, diag_right, expm, from_blocks, identity_residual, matmul, max_abs_diff, max_norm,
    scale, times_s, CMatrix,
};
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct Propagator<T: Scalar> {
    u: CMatrix<T>,
    n: usize,
    z0: T,
    z1: T,
    dressed: bool,
}

impl<T: Scalar> Propagator<T> {
    /// Wrap a raw `2N x 2N` matrix.
    pub fn from_matrix(u: CMatrix<T>, z0: T, z1: T) -> Result<Self> {
        if !u.is_square() || !u.nrows().is_multiple_of(2) || u.nrows() == 0 {
            return Err(Error::dimension("2N x 2N matrix", format!("{}x{}", u.nrows(), u.ncols())));
        }
        let n = u.nrows() / 2;
        Ok(Self {
            u,
            n,
            z0,
            z1,
            dressed: false,
        })
    }

    pub fn identity(n: usize, z: T) -> Self {
        Self {
            u: CMatrix::identity(2 * n, 2 * n),
            n,
            z0: z,
            z1: z,
            dressed: false,
        }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.u
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.u
    }

    /// Number of frequency points `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z0(&self) -> T {
        self.z0
    }

    pub fn z1(&self) -> T {
        self.z1
    }

    pub fn is_dressed(&self) -> bool {
        self.dressed
    }

    pub fn u_ss(&self) -> CMatrix<T> {
        block(&self.u, 0, 0, self.n, self.n)
    }

    pub fn u_si(&self) -> CMatrix<T> {
        block(&self.u, 0, self.n, self.n, self.n)
    }

    /// Lower-left block, `conj(U_is)`.
    pub fn u_is_conj(&self) -> CMatrix<T> {
        block(&self.u, self.n, 0, self.n, self.n)
    }

    /// Lower-right block, `conj(U_ii)`.
    pub fn u_ii_conj(&self) -> CMatrix<T> {
        block(&self.u, self.n, self.n, self.n, self.n)
    }

    pub fn u_is(&self) -> CMatrix<T> {
        conj(&self.u_is_conj())
    }

    pub fn u_ii(&self) -> CMatrix<T> {
        conj(&self.u_ii_conj())
    }

    /// `U(z1, zm) * U(zm, z0)`, with `self` the earlier segment.
    pub fn then(&self, later: &Propagator<T>) -> Result<Propagator<T>> {
        if self.dressed || later.dressed {
            return Err(Error::State("cannot compose dressed propagators".into()));
        }
        if later.n != self.n {
            return Err(Error::dimension(self.n, later.n));
        }
        Ok(Propagator {
            u: matmul(&later.u, &self.u),
            n: self.n,
            z0: self.z0,
            z1: later.z1,
            dressed: false,
        })
    }
}

fn i_times<T: Scalar>(x: T) -> Complex<T> {
    c(T::zero(), x)
}

/// `exp(i (z1 - z0) Q)` for a z-independent generator.
pub fn propagate_uniform<T: Scalar>(m: &GeneratorMatrices<T>, z0: T, z1: T) -> Result<Propagator<T>> {
    let u = expm(&scale(&m.q, i_times(z1 - z0)))?;
    Propagator::from_matrix(u, z0, z1)
}

/// Step-count policy for [`propagate_trotter`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StepControl {
    /// Target total number of slices; distributed over the smooth
    /// sub-intervals in proportion to their lengths, at least one each.
    Fixed(usize),
    /// Double the slice count until the max-norm change of `U` drops below
    /// `tolerance`, giving up at `max_steps`.
    Adaptive { tolerance: f64, max_steps: usize },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive {
            tolerance: 1e-8,
            max_steps: 4096,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrotterOutcome<T: Scalar> {
    pub propagator: Propagator<T>,
    /// Slices actually used.
    pub n_steps: usize,
    /// False only for adaptive runs that hit `max_steps`.
    pub converged: bool,
    /// Max-norm change between the last two adaptive iterates.
    pub last_change: Option<f64>,
}

/// Sub-intervals of `[z0, z1]` on which the generator is smooth.
fn smooth_intervals<T: Scalar>(source: &dyn GeneratorSource<T>, z0: T, z1: T) -> Vec<(T, T)> {
    let mut edges = vec![z0];
    edges.extend(source.breakpoints(z0, z1));
    edges.push(z1);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

fn allot_steps<T: Scalar>(intervals: &[(T, T)], total: usize) -> Vec<usize> {
    let length = intervals.iter().fold(T::zero(), |acc, (a, b)| acc + (*b - *a)).as_f64();
    intervals
        .iter()
        .map(|(a, b)| (((*b - *a).as_f64() / length) * total as f64).round().max(1.0) as usize)
        .collect()
}

fn matrix_power<T: Scalar>(m: &CMatrix<T>, mut k: usize) -> CMatrix<T> {
    let mut result: Option<CMatrix<T>> = None;
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => matmul(&base, &r),
            });
        }
        k >>= 1;
        if k > 0 {
            base = matmul(&base, &base);
        }
    }
    result.unwrap_or_else(|| CMatrix::identity(m.nrows(), m.ncols()))
}

fn product_with_steps<T: Scalar>(
    source: &dyn GeneratorSource<T>,
    intervals: &[(T, T)],
    steps: &[usize],
) -> Result<CMatrix<T>> {
    let dim = 2 * source.dimension();
    let mut u = CMatrix::<T>::identity(dim, dim);
    for (&(a, b), &k) in intervals.iter().zip(steps) {
        let dz = (b - a) / T::from_count(k);
        if source.is_constant_on(a, b) {
            // Identical slices commute; evaluate their product by squaring.
            let q = source.generator(a + (b - a) * T::lit(0.5))?;
            let step = expm(&scale(&q, i_times(dz)))?;
            u = matmul(&matrix_power(&step, k), &u);
            continue;
        }
        for p in 0..k {
            let mid = a + dz * (T::from_count(p) + T::lit(0.5));
            let q = source.generator(mid)?;
            let step = expm(&scale(&q, i_times(dz)))?;
            u = matmul(&step, &u);
        }
    }
    Ok(u)
}

/// Midpoint product formula on `[z0, z1]`.
pub fn propagate_trotter<T: Scalar>(
    source: &dyn GeneratorSource<T>,
    z0: T,
    z1: T,
    control: StepControl,
) -> Result<TrotterOutcome<T>> {
    if !(z0.is_finite() && z1.is_finite()) || z1 < z0 {
        return Err(Error::config("solver", "propagation needs finite z0 <= z1"));
    }
    if z1 == z0 {
        return Ok(TrotterOutcome {
            propagator: Propagator::identity(source.dimension(), z0),
            n_steps: 0,
            converged: true,
            last_change: None,
        });
    }
    let intervals = smooth_intervals(source, z0, z1);
    match control {
        StepControl::Fixed(n) => {
            if n == 0 {
                return Err(Error::config("solver.n_steps", "need at least one step"));
            }
            let steps = allot_steps(&intervals, n);
            let u = product_with_steps(source, &intervals, &steps)?;
            Ok(TrotterOutcome {
                propagator: Propagator::from_matrix(u, z0, z1)?,
                n_steps: steps.iter().sum(),
                converged: true,
                last_change: None,
            })
        }
        StepControl::Adaptive { tolerance, max_steps } => {
            if !(tolerance > 0.0) || max_steps == 0 {
                return Err(Error::config("solver.tolerance", "need a positive tolerance and step cap"));
            }
            if intervals.iter().all(|&(a, b)| source.is_constant_on(a, b)) {
                // Exact for any slice count.
                let steps = vec![1; intervals.len()];
                let u = product_with_steps(source, &intervals, &steps)?;
                return Ok(TrotterOutcome {
                    propagator: Propagator::from_matrix(u, z0, z1)?,
                    n_steps: intervals.len(),
                    converged: true,
                    last_change: None,
                });
            }
            let mut n = intervals.len().max(8).min(max_steps);
            let mut steps = allot_steps(&intervals, n);
            let mut previous = product_with_steps(source, &intervals, &steps)?;
            let mut last_change = None;
            while n < max_steps {
                n = (2 * n).min(max_steps);
                let next_steps = allot_steps(&intervals, n);
                let current = product_with_steps(source, &intervals, &next_steps)?;
                let change = max_abs_diff(&current, &previous).as_f64();
                last_change = Some(change);
                previous = current;
                steps = next_steps;
                if change < tolerance {
                    return Ok(TrotterOutcome {
                        propagator: Propagator::from_matrix(previous, z0, z1)?,
                        n_steps: steps.iter().sum(),
                        converged: true,
                        last_change,
                    });
                }
            }
            Ok(TrotterOutcome {
                propagator: Propagator::from_matrix(previous, z0, z1)?,
                n_steps: steps.iter().sum(),
                converged: false,
                last_change,
            })
        }
    }
}

/// Phase convention for the input/output dressing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum DressingConvention {
    /// Phases derived from `a_out = exp(-i dk z1) a(z1)`, `a_in = exp(-i dk z0) a(z0)`.
    /// Acts as a diagonal unitary on each side, so SU(1,1) membership is kept.
    #[default]
    Consistent,
    /// Cross-block phases with the beam labels of the two factors exchanged.
    /// Breaks SU(1,1) membership unless `dk_s = dk_i` or `z0 = z1 = 0`; kept
    /// for comparison only.
    LabelSwapped,
}

/// Convert `U(z1, z0)` into transfer functions between input and output
/// operators in the distant past and future.
pub fn dress_in_out<T: Scalar>(
    prop: &Propagator<T>,
    wg: &WaveguideSpec<T>,
    grid: &FrequencyGrid<T>,
    convention: DressingConvention,
) -> Result<Propagator<T>> {
    if prop.dressed {
        return Err(Error::State("propagator is already dressed".into()));
    }
    if grid.n_points() != prop.n {
        return Err(Error::dimension(prop.n, grid.n_points()));
    }
    let (z0, z1) = (prop.z0, prop.z1);
    let dks: Vec<T> = grid.nu().iter().map(|&nu| wg.delta_k_s(nu)).collect();
    let dki: Vec<T> = grid.nu().iter().map(|&nu| wg.delta_k_i(nu)).collect();
    let phase = |dk: &[T], z: T, sign: T| -> Vec<Complex<T>> { dk.iter().map(|&k| cis(sign * k * z)).collect() };
    let one = T::one();
    let dress = |m: CMatrix<T>, left: Vec<Complex<T>>, right: Vec<Complex<T>>| diag_right(&diag_left(&left, &m), &right);

    let ss = dress(prop.u_ss(), phase(&dks, z1, -one), phase(&dks, z0, one));
    let ii = dress(prop.u_ii_conj(), phase(&dki, z1, one), phase(&dki, z0, -one));
    let (si, is) = match convention {
        DressingConvention::Consistent => (
            dress(prop.u_si(), phase(&dks, z1, -one), phase(&dki, z0, -one)),
            dress(prop.u_is_conj(), phase(&dki, z1, one), phase(&dks, z0, one)),
        ),
        DressingConvention::LabelSwapped => (
            dress(prop.u_si(), phase(&dki, z1, -one), phase(&dks, z0, -one)),
            dress(prop.u_is_conj(), phase(&dks, z1, one), phase(&dki, z0, one)),
        ),
    };
    Ok(Propagator {
        u: from_blocks(&ss, &si, &is, &ii),
        n: prop.n,
        z0,
        z1,
        dressed: true,
    })
}

/// Residuals of the SU(1,1) group condition and its block consequences.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Su11Report {
    /// `max |U S U^dagger - S|`
    pub group: f64,
    /// `max |U_ss U_ss^dagger - U_si U_si^dagger - I|`
    pub signal: f64,
    /// `max |U_ii U_ii^dagger - U_is U_is^dagger - I|`
    pub idler: f64,
    /// `max |U_ss U_is^T - U_si U_ii^T|`
    pub cross: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Su11Report {
    pub fn worst(&self) -> f64 {
        self.group.max(self.signal).max(self.idler).max(self.cross)
    }
}

pub fn check_su11<T: Scalar>(prop: &Propagator<T>, tolerance: f64) -> Su11Report {
    let n = prop.n;
    let u = &prop.u;
    let mut usu = matmul(&times_s(u), &u.adjoint());
    for i in 0..2 * n {
        usu[(i, i)].re -= if i < n { T::one() } else { -T::one() };
    }
    let group = max_norm(&usu).as_f64();

    let ss = prop.u_ss();
    let si = prop.u_si();
    let ll = prop.u_is_conj();
    let lr = prop.u_ii_conj();
    // U_ii U_ii^dagger = conj(lr lr^dagger), so the residual can use the stored blocks.
    let signal = identity_residual(&(matmul(&ss, &ss.adjoint()) - matmul(&si, &si.adjoint()))).as_f64();
    let idler = identity_residual(&(matmul(&lr, &lr.adjoint()) - matmul(&ll, &ll.adjoint()))).as_f64();
    let cross = max_norm(&(matmul(&ss, &ll.adjoint()) - matmul(&si, &lr.adjoint()))).as_f64();
    let worst = group.max(signal).max(idler).max(cross);
    Su11Report {
        group,
        signal,
        idler,
        cross,
        tolerance,
        passed: worst.is_finite() && worst <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{assemble_q, FnGenerator, TwinBeamGenerator};
    use crate::grid::make_grid;
    use crate::profile::{Profile, Segment};
    use crate::pump::{EnvelopeGrid, ProcessOrder, PumpField, PumpSpec};
    use nalgebra::Schur;
    use proptest::prelude::*;

    fn matrices(f: CMatrix<f64>, g: CMatrix<f64>, h: CMatrix<f64>) -> GeneratorMatrices<f64> {
        GeneratorMatrices::from_blocks(f, g, h).unwrap()
    }

    #[test]
    fn zero_generator_gives_identity() {
        let z = CMatrix::<f64>::zeros(3, 3);
        let p = propagate_uniform(&matrices(z.clone(), z.clone(), z), 0.0, 2.0).unwrap();
        assert!(identity_residual(p.matrix()) < 1e-15);
    }

    #[test]
    fn pure_walkoff_phases() {
        let dks = [0.3, -0.1, 0.7];
        let dki = [-0.2, 0.5, 0.05];
        let g = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, dks.iter().map(|&x| c(x, 0.0))));
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, dki.iter().map(|&x| c(x, 0.0))));
        let ell = 2.5;
        let p = propagate_uniform(&matrices(CMatrix::zeros(3, 3), g, h), 0.0, ell).unwrap();
        for k in 0..3 {
            assert!((p.u_ss()[(k, k)] - cis(dks[k] * ell)).norm() < 1e-14);
            assert!((p.u_ii_conj()[(k, k)] - cis(-dki[k] * ell)).norm() < 1e-14);
        }
        assert!(max_norm(&p.u_si()) < 1e-15);
    }

    /// `exp(i l [[0, g], [-g, 0]]) = [[cosh gl, i sinh gl], [-i sinh gl, cosh gl]]`.
    #[test]
    fn single_mode_closed_form() {
        for (g, ell) in [(0.3, 1.0), (1.5, 2.0), (0.75, 4.0)] {
            let z = CMatrix::<f64>::zeros(1, 1);
            let f = CMatrix::from_element(1, 1, c(g, 0.0));
            let p = propagate_uniform(&matrices(f, z.clone(), z), 0.0, ell).unwrap();
            let r: f64 = g * ell;
            let u = p.matrix();
            let scale = r.cosh();
            assert!((u[(0, 0)] - c(r.cosh(), 0.0)).norm() < 1e-14 * scale);
            assert!((u[(0, 1)] - c(0.0, r.sinh())).norm() < 1e-14 * scale);
            assert!((u[(1, 0)] - c(0.0, -r.sinh())).norm() < 1e-14 * scale);
            assert!((u[(1, 1)] - c(r.cosh(), 0.0)).norm() < 1e-14 * scale);
        }
    }

    fn random_su11_generator(n: usize, seed: u64, norm: f64) -> GeneratorMatrices<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut rand = |n: usize| CMatrix::<f64>::from_fn(n, n, |_, _| c(next(), next()));
        let f = rand(n);
        let a = rand(n);
        let b = rand(n);
        let g = (&a + a.adjoint()).map(|z| z * 0.5);
        let h = (&b + b.adjoint()).map(|z| z * 0.5);
        let q = assemble_q(&f, &g, &h);
        let s = norm / crate::linalg::norm1(&q);
        matrices(f.map(|z| z * s), g.map(|z| z * s), h.map(|z| z * s))
    }

    /// `exp(A) = V diag(exp(lambda)) V^-1` with eigenvectors from a complex
    /// Schur form and triangular back-substitution.
    fn expm_by_eigendecomposition(a: &CMatrix<f64>) -> CMatrix<f64> {
        let n = a.nrows();
        let (z, t) = Schur::new(a.clone()).unpack();
        let mut x = CMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let lambda = t[(k, k)];
            x[(k, k)] = c(1.0, 0.0);
            for i in (0..k).rev() {
                let mut acc = c(0.0, 0.0);
                for j in i + 1..=k {
                    acc += t[(i, j)] * x[(j, k)];
                }
                x[(i, k)] = -acc / (t[(i, i)] - lambda);
            }
        }
        let v = &z * &x;
        let vinv = v.clone().try_inverse().unwrap();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, (0..n).map(|k| t[(k, k)].exp())));
        &v * d * vinv
    }

    #[test]
    fn expm_matches_eigendecomposition_oracle() {
        for (seed, norm) in [(1u64, 0.5), (2, 3.0), (3, 7.0), (4, 10.0), (5, 10.0)] {
            let m = random_su11_generator(6, seed, norm);
            let arg = scale(&m.q, c(0.0, 1.0));
            let ours = expm(&arg).unwrap();
            let oracle = expm_by_eigendecomposition(&arg);
            let rel = max_abs_diff(&ours, &oracle) / max_norm(&oracle);
            assert!(rel <= 1e-10, "seed {seed}: relative error {rel}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn uniform_propagators_are_su11(n in 1usize..9, seed in 0u64..10_000, norm in 0.1f64..6.0) {
            let m = random_su11_generator(n, seed, norm);
            let p = propagate_uniform(&m, 0.0, 1.0).unwrap();
            let report = check_su11(&p, 1e-10);
            prop_assert!(report.passed, "{report:?}");
        }

        #[test]
        fn dressing_preserves_su11(seed in 0u64..10_000, z0 in -3.0f64..0.0, z1 in 0.0f64..3.0) {
            let n = 5;
            let grid = make_grid(2.0, n).unwrap();
            let wg = WaveguideSpec::top_hat(0.7, 1.4, 1.0, z0, z1 + 0.1, 1.0, ProcessOrder::Spdc).unwrap();
            let p = Propagator::from_matrix(
                propagate_uniform(&random_su11_generator(n, seed, 2.0), z0, z1).unwrap().into_matrix(),
                z0,
                z1,
            ).unwrap();
            let before = check_su11(&p, 1e-10);
            let after = check_su11(&dress_in_out(&p, &wg, &grid, DressingConvention::Consistent).unwrap(), 1e-10);
            prop_assert!((after.group - before.group).abs() <= 1e-14 * 10.0, "{before:?} {after:?}");
            prop_assert!(after.passed);
        }
    }

    #[test]
    fn dressing_identity_cases_and_double_dressing() {
        let n = 4;
        let grid = make_grid(2.0, n).unwrap();
        let m = random_su11_generator(n, 9, 2.0);
        let wg = WaveguideSpec::top_hat(0.7, 1.4, 1.0, 0.0, 1.0, 1.0, ProcessOrder::Spdc).unwrap();
        let at_origin = propagate_uniform(&m, 0.0, 0.0).unwrap();
        let d = dress_in_out(&at_origin, &wg, &grid, DressingConvention::Consistent).unwrap();
        assert!(max_abs_diff(d.matrix(), at_origin.matrix()) < 1e-15);
        assert!(dress_in_out(&d, &wg, &grid, DressingConvention::Consistent).is_err());

        let flat = WaveguideSpec::top_hat(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, ProcessOrder::Spdc).unwrap();
        let p = propagate_uniform(&m, -1.0, 2.0).unwrap();
        let d = dress_in_out(&p, &flat, &grid, DressingConvention::Consistent).unwrap();
        assert!(max_abs_diff(d.matrix(), p.matrix()) < 1e-15);
    }

    /// The label-swapped cross-block phases are only consistent with the
    /// group structure when the two walk-offs coincide.
    #[test]
    fn label_swapped_dressing_breaks_su11() {
        let n = 5;
        let grid = make_grid(2.0, n).unwrap();
        let wg = WaveguideSpec::top_hat(0.7, 1.4, 1.0, -1.0, 2.0, 1.0, ProcessOrder::Spdc).unwrap();
        let p = propagate_uniform(&random_su11_generator(n, 4, 2.0), -1.0, 2.0).unwrap();
        let swapped = dress_in_out(&p, &wg, &grid, DressingConvention::LabelSwapped).unwrap();
        assert!(!check_su11(&swapped, 1e-10).passed);
        let consistent = dress_in_out(&p, &wg, &grid, DressingConvention::Consistent).unwrap();
        assert!(check_su11(&consistent, 1e-10).passed);
    }

    #[test]
    fn su11_check_catches_corruption() {
        let id = Propagator::<f64>::identity(3, 0.0);
        let r = check_su11(&id, 1e-12);
        assert_eq!(r.worst(), 0.0);
        assert!(r.passed);

        let p = propagate_uniform(&random_su11_generator(4, 11, 3.0), 0.0, 1.0).unwrap();
        let mut u = p.into_matrix();
        u[(1, 2)] += c(1e-3, 0.0);
        let r = check_su11(&Propagator::from_matrix(u, 0.0, 1.0).unwrap(), 1e-10);
        assert!(r.worst() > 1e-4);
        assert!(!r.passed);
    }

    #[test]
    fn trotter_equals_uniform_for_constant_generator() {
        let m = random_su11_generator(6, 21, 1.5);
        let q = m.q.clone();
        let gen = FnGenerator::new(6, move |_z: f64| q.clone()).constant();
        let reference = propagate_uniform(&m, 0.0, 2.0).unwrap();
        for n in [1, 3, 16, 100] {
            let out = propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(n)).unwrap();
            let err = max_abs_diff(out.propagator.matrix(), reference.matrix());
            assert!(err <= 1e-12, "n = {n}: {err}");
        }
    }

    /// `Q(z) = q(z) Q0` commutes with itself, so the product equals
    /// `exp(i (int q) Q0)` up to the midpoint-rule error of the integral.
    #[test]
    fn trotter_commuting_family() {
        let m = random_su11_generator(4, 5, 1.0);
        let q0 = m.q.clone();
        let q = |z: f64| 1.0 + 0.5 * z.sin();
        let gen = FnGenerator::new(4, move |z: f64| q0.map(|x| x * q(z)));
        // int_0^2 (1 + 0.5 sin z) dz
        let integral = 2.0 + 0.5 * (1.0 - 2.0f64.cos());
        let exact = expm(&scale(&m.q, c(0.0, integral))).unwrap();
        let mut errors = Vec::new();
        for n in [16, 32, 64] {
            let out = propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(n)).unwrap();
            errors.push(max_abs_diff(out.propagator.matrix(), &exact));
        }
        let order = (errors[1] / errors[2]).log2();
        assert!(errors[2] < 1e-4);
        assert!((order - 2.0).abs() < 0.1, "order {order}, errors {errors:?}");
    }

    fn spm_generator(n: usize) -> TwinBeamGenerator<f64> {
        let grid = make_grid(4.0, n).unwrap();
        let mut spec = PumpSpec::gaussian(1.0, 1.0, 1.0, ProcessOrder::Spdc);
        spec.zeta_p = Profile::new(vec![Segment { start: 0.0, end: 2.0, value: 2.0 }]).unwrap();
        let pump = PumpField::new(spec, EnvelopeGrid { n_points: 512, half_widths: 8.0 }).unwrap();
        let wg = WaveguideSpec::top_hat(0.8, 1.3, 1.0, 0.0, 2.0, 0.5, ProcessOrder::Spdc).unwrap();
        TwinBeamGenerator::new(pump, wg, grid).unwrap()
    }

    #[test]
    fn trotter_second_order_with_spm() {
        let gen = spm_generator(8);
        let run = |n| propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(n)).unwrap().propagator;
        let reference = run(64);
        let e1 = max_abs_diff(run(8).matrix(), reference.matrix());
        let e2 = max_abs_diff(run(16).matrix(), reference.matrix());
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn trotter_semigroup() {
        let gen = spm_generator(6);
        let whole = propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(20)).unwrap().propagator;
        let first = propagate_trotter(&gen, 0.0, 1.0, StepControl::Fixed(10)).unwrap().propagator;
        let second = propagate_trotter(&gen, 1.0, 2.0, StepControl::Fixed(10)).unwrap().propagator;
        let joined = first.then(&second).unwrap();
        assert!(max_abs_diff(joined.matrix(), whole.matrix()) < 1e-10);
        assert!(check_su11(&whole, 1e-10).passed);
    }

    #[test]
    fn adaptive_trotter_converges() {
        let gen = spm_generator(6);
        let out = propagate_trotter(
            &gen,
            0.0,
            2.0,
            StepControl::Adaptive {
                tolerance: 1e-6,
                max_steps: 4096,
            },
        )
        .unwrap();
        assert!(out.converged);
        assert!(out.last_change.unwrap() < 1e-6);
        let capped = propagate_trotter(
            &gen,
            0.0,
            2.0,
            StepControl::Adaptive {
                tolerance: 1e-14,
                max_steps: 16,
            },
        )
        .unwrap();
        assert!(!capped.converged);
        assert!(propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(0)).is_err());
    }

    #[test]
    fn slices_snap_to_poling_flips() {
        let grid = make_grid(3.0, 5).unwrap();
        let pump = PumpField::new(
            PumpSpec::gaussian(1.0, 1.0, 1.0, ProcessOrder::Spdc),
            EnvelopeGrid { n_points: 256, half_widths: 8.0 },
        )
        .unwrap();
        let mut wg = WaveguideSpec::top_hat(0.8, 1.3, 1.0, 0.0, 2.0, 0.5, ProcessOrder::Spdc).unwrap();
        wg.g_profile = Profile::periodic_poling(0.0, 2.0, 0.8).unwrap();
        let gen = TwinBeamGenerator::new(pump, wg, grid).unwrap();
        // Each domain is constant, so any slice count gives the exact product.
        let coarse = propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(1)).unwrap();
        let fine = propagate_trotter(&gen, 0.0, 2.0, StepControl::Fixed(200)).unwrap();
        assert!(max_abs_diff(coarse.propagator.matrix(), fine.propagator.matrix()) < 1e-12);
        assert_eq!(coarse.n_steps, 5);
    }

    #[test]
    fn zero_pump_gives_pure_phases() {
        let grid = make_grid(3.0, 6).unwrap();
        let pump = PumpField::new(PumpSpec::gaussian(0.0, 1.0, 1.0, ProcessOrder::Spdc), EnvelopeGrid::default()).unwrap();
        let wg = WaveguideSpec::top_hat(0.8, 1.3, 1.0, 0.0, 2.0, 0.5, ProcessOrder::Spdc).unwrap();
        let gen = TwinBeamGenerator::new(pump, wg, grid).unwrap();
        let p = propagate_uniform(&gen.matrices(1.0).unwrap(), 0.0, 2.0).unwrap();
        assert_eq!(max_norm(&p.u_si()), 0.0);
        let ss = p.u_ss();
        assert!(identity_residual(&matmul(&ss, &ss.adjoint())) < 1e-14);
        let ii = p.u_ii();
        assert!(identity_residual(&matmul(&ii, &ii.adjoint())) < 1e-14);
    }
}
