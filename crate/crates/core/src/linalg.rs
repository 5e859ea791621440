//! Dense complex linear algebra shared by the generator, propagator and
//! decomposition code.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use num_complex::Complex;

pub type CMatrix<T> = DMatrix<Complex<T>>;

#[inline]
pub fn c<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// `exp(i * theta)`.
#[inline]
pub fn cis<T: Scalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn cabs<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[inline]
pub fn carg<T: Scalar>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

#[inline]
pub fn cscale<T: Scalar>(z: Complex<T>, s: T) -> Complex<T> {
    Complex::new(z.re * s, z.im * s)
}

#[inline]
pub fn is_finite<T: Scalar>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn matmul<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    T::complex_gemm(a, b)
}

/// Largest entry modulus.
pub fn max_norm<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: Scalar>(m: &CMatrix<T>) -> T {
    m.column_iter()
        .map(|col| col.iter().fold(T::zero(), |acc, z| acc + cabs(*z)))
        .fold(T::zero(), |acc, s| acc.max(s))
}

pub fn frobenius<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn all_finite<T: Scalar>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| is_finite(*z))
}

pub fn scale<T: Scalar>(m: &CMatrix<T>, s: Complex<T>) -> CMatrix<T> {
    m.map(|z| z * s)
}

/// Elementwise complex conjugate.
pub fn conj<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    m.map(|z| z.conj())
}

/// `max |A_ij - B_ij|`.
pub fn max_abs_diff<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
}

/// Best global phase `e^{i phi}` to apply to `b` so that it overlaps `a`.
fn aligning_phase<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<f64> {
    let overlap = a.iter().zip(b.iter()).fold(Complex::new(0.0, 0.0), |acc, (x, y)| {
        acc + Complex::new(x.re.as_f64(), x.im.as_f64()) * Complex::new(y.re.as_f64(), -y.im.as_f64())
    });
    if overlap.norm() == 0.0 {
        Complex::new(1.0, 0.0)
    } else {
        overlap / overlap.norm()
    }
}

fn phase_aligned<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>, norm: impl Fn(&CMatrix<T>) -> f64) -> Vec<f64> {
    assert_eq!(a.shape(), b.shape());
    let phase = aligning_phase(a, b);
    let (na, nb) = (norm(a), norm(b));
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let x = Complex::new(x.re.as_f64(), x.im.as_f64()) / na;
            let y = Complex::new(y.re.as_f64(), y.im.as_f64()) * phase / nb;
            (x - y).norm()
        })
        .collect()
}

/// `|| a / ||a|| - e^{i phi} b / ||b|| ||` in the Frobenius norm, with the
/// global phase `phi` chosen to minimise it.
pub fn phase_aligned_distance<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> f64 {
    phase_aligned(a, b, |m| frobenius(m).as_f64()).iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// As [`phase_aligned_distance`] but with both kernels scaled to unit peak
/// modulus and the largest entry difference reported.
pub fn phase_aligned_max_distance<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> f64 {
    phase_aligned(a, b, |m| max_norm(m).as_f64()).into_iter().fold(0.0, f64::max)
}

/// `max |A - I|`.
pub fn identity_residual<T: Scalar>(a: &CMatrix<T>) -> T {
    let mut worst = T::zero();
    for ((i, j), z) in a.iter().enumerate().map(|(k, z)| ((k % a.nrows(), k / a.nrows()), z)) {
        let target = if i == j { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) };
        worst = worst.max(cabs(*z - target));
    }
    worst
}

/// Copy of the `rows x cols` block starting at `(r0, c0)`.
pub fn block<T: Scalar>(m: &CMatrix<T>, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix<T> {
    m.view((r0, c0), (rows, cols)).into_owned()
}

/// Assemble `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn from_blocks<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>, c: &CMatrix<T>, d: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    let mut out = CMatrix::<T>::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(b);
    out.view_mut((n, 0), (n, n)).copy_from(c);
    out.view_mut((n, n), (n, n)).copy_from(d);
    out
}

/// `S = diag(I_n, -I_n)` applied from the right: flips the sign of the last `n` columns.
pub fn times_s<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let n = m.ncols() / 2;
    let mut out = m.clone();
    for j in n..2 * n {
        out.column_mut(j).neg_mut();
    }
    out
}

/// `S * M`: flips the sign of the last `n` rows.
pub fn s_times<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let n = m.nrows() / 2;
    let mut out = m.clone();
    for i in n..2 * n {
        out.row_mut(i).neg_mut();
    }
    out
}

pub fn s_matrix<T: Scalar>(n: usize) -> CMatrix<T> {
    CMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if i != j {
            c(T::zero(), T::zero())
        } else if i < n {
            c(T::one(), T::zero())
        } else {
            c(-T::one(), T::zero())
        }
    })
}

/// Left-multiply by `diag(d)`.
pub fn diag_left<T: Scalar>(d: &[Complex<T>], m: &CMatrix<T>) -> CMatrix<T> {
    let mut out = m.clone();
    for (i, di) in d.iter().enumerate() {
        for z in out.row_mut(i).iter_mut() {
            *z *= *di;
        }
    }
    out
}

/// Right-multiply by `diag(d)`.
pub fn diag_right<T: Scalar>(m: &CMatrix<T>, d: &[Complex<T>]) -> CMatrix<T> {
    let mut out = m.clone();
    for (j, dj) in d.iter().enumerate() {
        for z in out.column_mut(j).iter_mut() {
            *z *= *dj;
        }
    }
    out
}

fn pade_coefficients(degree: usize) -> &'static [f64] {
    match degree {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé degree {degree}"),
    }
}

fn add_scaled<T: Scalar>(acc: &mut CMatrix<T>, m: &CMatrix<T>, s: f64) {
    let s = T::lit(s);
    acc.zip_apply(m, |a, b| *a += cscale(b, s));
}

fn add_identity<T: Scalar>(acc: &mut CMatrix<T>, s: f64) {
    let s = T::lit(s);
    for i in 0..acc.nrows() {
        acc[(i, i)].re += s;
    }
}

/// Odd (`u`) and even (`v`) parts of the degree-`m` Padé numerator.
fn pade_uv<T: Scalar>(a: &CMatrix<T>, degree: usize) -> (CMatrix<T>, CMatrix<T>) {
    let n = a.nrows();
    let b = pade_coefficients(degree);
    let a2 = matmul(a, a);
    if degree == 13 {
        let a4 = matmul(&a2, &a2);
        let a6 = matmul(&a4, &a2);
        let mut inner_u = CMatrix::<T>::zeros(n, n);
        add_scaled(&mut inner_u, &a6, b[13]);
        add_scaled(&mut inner_u, &a4, b[11]);
        add_scaled(&mut inner_u, &a2, b[9]);
        let mut u = matmul(&a6, &inner_u);
        add_scaled(&mut u, &a6, b[7]);
        add_scaled(&mut u, &a4, b[5]);
        add_scaled(&mut u, &a2, b[3]);
        add_identity(&mut u, b[1]);
        let u = matmul(a, &u);

        let mut inner_v = CMatrix::<T>::zeros(n, n);
        add_scaled(&mut inner_v, &a6, b[12]);
        add_scaled(&mut inner_v, &a4, b[10]);
        add_scaled(&mut inner_v, &a2, b[8]);
        let mut v = matmul(&a6, &inner_v);
        add_scaled(&mut v, &a6, b[6]);
        add_scaled(&mut v, &a4, b[4]);
        add_scaled(&mut v, &a2, b[2]);
        add_identity(&mut v, b[0]);
        return (u, v);
    }
    // powers A^2, A^4, ... up to A^(degree-1)
    let mut powers = vec![a2];
    for _ in 1..degree / 2 {
        let next = matmul(powers.last().unwrap(), &powers[0]);
        powers.push(next);
    }
    let mut u = CMatrix::<T>::zeros(n, n);
    let mut v = CMatrix::<T>::zeros(n, n);
    add_identity(&mut u, b[1]);
    add_identity(&mut v, b[0]);
    for (k, p) in powers.iter().enumerate() {
        add_scaled(&mut u, p, b[2 * k + 3]);
        add_scaled(&mut v, p, b[2 * k + 2]);
    }
    (matmul(a, &u), v)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant whose degree adapts to the 1-norm of `a`.
pub fn expm<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(Error::dimension("square matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    if !all_finite(a) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm1(a).as_f64();
    let table = T::PADE_TABLE;
    let (max_degree, max_theta) = *table.last().unwrap();

    let (degree, squarings) = match table.iter().find(|(_, theta)| norm <= *theta) {
        Some(&(m, _)) => (m, 0u32),
        None => {
            let s = (norm / max_theta).log2().ceil().max(0.0) as u32;
            (max_degree, s)
        }
    };

    let scaled;
    let arg = if squarings > 0 {
        scaled = scale(a, c(T::lit(0.5f64.powi(squarings as i32)), T::zero()));
        &scaled
    } else {
        a
    };

    let (u, v) = pade_uv(arg, degree);
    let denominator = &v - &u;
    let numerator = &v + &u;
    let mut result = denominator
        .lu()
        .solve(&numerator)
        .ok_or_else(|| Error::Singular("Padé denominator".into()))?;
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    Ok(result)
}
