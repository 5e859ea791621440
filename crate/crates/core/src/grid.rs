//! Shared frequency discretisation.
//!
//! Signal and idler are sampled on the same uniform grid of detunings
//! `nu_n = -span + n * delta_omega`, `n = 0..N`, endpoints included. Block
//! matrices built on this grid relate to continuous transfer kernels by a
//! single factor of `delta_omega` per entry.

use crate::error::{Error, Result};
use crate::linalg::{cscale, CMatrix};
use crate::scalar::Scalar;
use serde::Serialize;

/// Pump bandwidths covered by the default detuning half-width.
pub const DEFAULT_SPAN_IN_SIGMAS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyGrid<T> {
    n_points: usize,
    span: T,
    delta_omega: T,
    nu: Vec<T>,
}

/// Build a grid of `n_points` detunings spanning `[-span, span]`.
pub fn make_grid<T: Scalar>(span: T, n_points: usize) -> Result<FrequencyGrid<T>> {
    if n_points < 2 {
        return Err(Error::config("grid.n_points", format!("need at least 2 points, got {n_points}")));
    }
    if !span.is_finite() || span <= T::zero() {
        return Err(Error::config("grid.span", format!("span must be positive and finite, got {span}")));
    }
    let intervals = T::from_count(n_points - 1);
    // Integer numerators make nu[n] == -nu[N-1-n] exact.
    let nu = (0..n_points)
        .map(|n| span * T::lit(2.0 * n as f64 - (n_points - 1) as f64) / intervals)
        .collect();
    Ok(FrequencyGrid {
        n_points,
        span,
        delta_omega: T::lit(2.0) * span / intervals,
        nu,
    })
}

impl<T: Scalar> FrequencyGrid<T> {
    /// Grid with the default half-width `4 * sigma`.
    pub fn for_bandwidth(sigma: T, n_points: usize) -> Result<Self> {
        make_grid(sigma * T::lit(DEFAULT_SPAN_IN_SIGMAS), n_points)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn span(&self) -> T {
        self.span
    }

    pub fn delta_omega(&self) -> T {
        self.delta_omega
    }

    pub fn nu(&self) -> &[T] {
        &self.nu
    }

    /// The `2N - 1` distinct values of `nu_n + nu_m`, indexed by `n + m`.
    pub fn sum_nodes(&self) -> Vec<T> {
        let intervals = T::from_count(self.n_points - 1);
        (0..2 * self.n_points - 1)
            .map(|k| self.span * T::lit(2.0 * k as f64 - 2.0 * (self.n_points - 1) as f64) / intervals)
            .collect()
    }

    /// The `2N - 1` distinct values of `nu_n - nu_m`, indexed by `n - m + N - 1`.
    pub fn difference_nodes(&self) -> Vec<T> {
        let intervals = T::from_count(self.n_points - 1);
        (0..2 * self.n_points - 1)
            .map(|k| self.span * T::lit(2.0 * (k as f64 - (self.n_points - 1) as f64)) / intervals)
            .collect()
    }

    /// Rectangle rule `delta_omega * sum_n f(nu_n)`.
    pub fn integrate(&self, samples: &[T]) -> T {
        samples.iter().fold(T::zero(), |acc, &f| acc + f) * self.delta_omega
    }
}

/// Continuous transfer function sampled on the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferKernel<T: Scalar> {
    values: CMatrix<T>,
    delta_omega: T,
}

impl<T: Scalar> TransferKernel<T> {
    /// `U(nu_n, nu_m)`.
    pub fn at(&self, n: usize, m: usize) -> num_complex::Complex<T> {
        self.values[(n, m)]
    }

    pub fn values(&self) -> &CMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> CMatrix<T> {
        self.values
    }

    pub fn delta_omega(&self) -> T {
        self.delta_omega
    }
}

/// Kernel values `U(nu_n, nu_m) = block[n, m] / delta_omega`.
pub fn matrix_to_transfer<T: Scalar>(block: &CMatrix<T>, grid: &FrequencyGrid<T>) -> Result<TransferKernel<T>> {
    check_square(block, grid)?;
    let inv = T::one() / grid.delta_omega;
    Ok(TransferKernel {
        values: block.map(|z| cscale(z, inv)),
        delta_omega: grid.delta_omega,
    })
}

/// Inverse of [`matrix_to_transfer`].
pub fn transfer_to_matrix<T: Scalar>(kernel: &TransferKernel<T>, grid: &FrequencyGrid<T>) -> Result<CMatrix<T>> {
    check_square(&kernel.values, grid)?;
    Ok(kernel.values.map(|z| cscale(z, grid.delta_omega)))
}

/// Wrap raw kernel samples (already divided by `delta_omega`).
pub fn kernel_from_values<T: Scalar>(values: CMatrix<T>, grid: &FrequencyGrid<T>) -> Result<TransferKernel<T>> {
    check_square(&values, grid)?;
    Ok(TransferKernel {
        values,
        delta_omega: grid.delta_omega,
    })
}

fn check_square<T: Scalar>(block: &CMatrix<T>, grid: &FrequencyGrid<T>) -> Result<()> {
    let n = grid.n_points;
    if block.shape() != (n, n) {
        return Err(Error::dimension(
            format!("{n}x{n}"),
            format!("{}x{}", block.nrows(), block.ncols()),
        ));
    }
    Ok(())
}
