//! Floating-point scalar abstraction.
//!
//! All numerics in the crate are written against [`Scalar`], which is
//! implemented for `f32` and `f64`. Per-type specialisations (the complex
//! gemm kernel and the Padé degree table for the matrix exponential) live
//! here so the algorithms themselves stay generic.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real floating-point type the simulator is generic over.
pub trait Scalar:
    RealField
    + Copy
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Display
    + Debug
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// `(degree, theta)` pairs for diagonal Padé approximants, ascending.
    ///
    /// `theta` is the largest 1-norm for which the approximant of that
    /// degree meets unit roundoff for this type. The last entry is the
    /// degree used together with scaling and squaring.
    const PADE_TABLE: &'static [(usize, f64)];

    /// Machine epsilon as `f64`.
    const EPSILON: f64;

    /// `C <- A * B` for dense complex column-major matrices.
    fn complex_gemm(a: &DMatrix<Complex<Self>>, b: &DMatrix<Complex<Self>>) -> DMatrix<Complex<Self>>;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Conversion from a count or index.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path, $table:expr) => {
        impl Scalar for $t {
            const PADE_TABLE: &'static [(usize, f64)] = $table;
            const EPSILON: f64 = <$t>::EPSILON as f64;

            fn complex_gemm(
                a: &DMatrix<Complex<$t>>,
                b: &DMatrix<Complex<$t>>,
            ) -> DMatrix<Complex<$t>> {
                let (m, k) = a.shape();
                let (k2, n) = b.shape();
                assert_eq!(k, k2, "inner dimensions differ");
                let mut c = DMatrix::<Complex<$t>>::zeros(m, n);
                if m == 0 || n == 0 || k == 0 {
                    return c;
                }
                // SAFETY: nalgebra stores dense matrices contiguously in
                // column-major order and Complex<T> is repr(C) [re, im], which
                // is the layout matrixmultiply expects for its complex kernels.
                unsafe {
                    $gemm(
                        matrixmultiply::CGemmOption::Standard,
                        matrixmultiply::CGemmOption::Standard,
                        m,
                        k,
                        n,
                        [1.0, 0.0],
                        a.as_ptr() as *const [$t; 2],
                        1,
                        m as isize,
                        b.as_ptr() as *const [$t; 2],
                        1,
                        k as isize,
                        [0.0, 0.0],
                        c.as_mut_ptr() as *mut [$t; 2],
                        1,
                        m as isize,
                    );
                }
                c
            }
        }
    };
}

// Higham (2005) bounds for double precision.
impl_scalar!(
    f64,
    matrixmultiply::zgemm,
    &[
        (3, 1.495585217958292e-2),
        (5, 2.53939833006323e-1),
        (7, 9.504178996162932e-1),
        (9, 2.097847961257068e0),
        (13, 5.371920351148152e0),
    ]
);

// Single precision: degree 7 with scaling is already optimal.
impl_scalar!(
    f32,
    matrixmultiply::cgemm,
    &[
        (3, 4.258730016922831e-1),
        (5, 1.880152677804762e0),
        (7, 3.92572478313866e0),
    ]
);
