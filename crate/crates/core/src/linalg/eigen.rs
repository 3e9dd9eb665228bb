//! Hermitian eigensolvers.
//!
//! Dense Hermitian input is reduced to a real symmetric tridiagonal matrix by
//! Householder reflections (the complex subdiagonal is rotated onto the real
//! axis with a diagonal phase matrix); the tridiagonal problem is then solved
//! by the implicit QL algorithm with Wilkinson-style shifts. Eigenvalues come
//! back in ascending order, eigenvectors as matrix columns.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{CMatrix, RMatrix};
use crate::{Error, Result};

/// Iterations allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 64;

trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn re(self) -> f64;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn scale(self, f: f64) -> Self;
    /// `self / |self|`, or one for zero.
    fn unit_phase(self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn re(self) -> f64 {
        self
    }
    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, f: f64) -> Self {
        self * f
    }
    fn unit_phase(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn scale(self, f: f64) -> Self {
        self * f
    }
    fn unit_phase(self) -> Self {
        let r = self.norm();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            self / r
        }
    }
}

/// Householder reduction of a dense Hermitian matrix (row-major, `n × n`).
///
/// Returns the real diagonal, the non-negative real subdiagonal and the
/// unitary `Q` (row-major) with `A = Q T Q†`.
fn tridiagonalize<T: Scalar>(mut a: Vec<T>, n: usize) -> (Vec<f64>, Vec<f64>, Vec<T>) {
    let mut q: Vec<T> = vec![T::zero(); n * n];
    for i in 0..n {
        q[i * n + i] = T::zero() + one_like::<T>();
    }
    let mut sub: Vec<T> = vec![T::zero(); n.saturating_sub(1)];
    let mut u: Vec<T> = vec![T::zero(); n];
    let mut p: Vec<T> = vec![T::zero(); n];

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x0 = a[(k + 1) * n + k];
        let tail: f64 = (k + 2..n).map(|i| a[i * n + k].norm_sqr()).sum();
        if tail == 0.0 {
            sub[k] = x0;
            continue;
        }
        let norm = (x0.norm_sqr() + tail).sqrt();
        let alpha = -x0.unit_phase().scale(norm);

        // u = (x - alpha e1) / |x - alpha e1|
        let u = &mut u[..m];
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = a[(k + 1 + i) * n + k];
        }
        u[0] -= alpha;
        let un = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v = v.scale(1.0 / un));

        // p = B u on the trailing block, c = u† p
        let p = &mut p[..m];
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            let mut acc = T::zero();
            for (bij, &uj) in row.iter().zip(u.iter()) {
                acc += *bij * uj;
            }
            p[i] = acc;
        }
        let c: f64 = u
            .iter()
            .zip(p.iter())
            .map(|(&ui, &pi)| (ui.conj() * pi).re())
            .sum();
        // q = 2p - 2c u; B <- B - u q† - q u†
        for i in 0..m {
            p[i] = p[i].scale(2.0) - u[i].scale(2.0 * c);
        }
        for i in 0..m {
            let (ui, qi) = (u[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            for j in 0..m {
                row[j] -= ui * p[j].conj() + qi * u[j].conj();
            }
        }
        for i in k + 1..n {
            a[i * n + k] = T::zero();
            a[k * n + i] = T::zero();
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        sub[k] = alpha;

        // Q <- Q (I - 2 u u†) on columns k+1..n
        for r in 0..n {
            let row = &mut q[r * n + k + 1..(r + 1) * n];
            let mut s = T::zero();
            for (qj, &uj) in row.iter().zip(u.iter()) {
                s += *qj * uj;
            }
            let s2 = s.scale(2.0);
            for (qj, &uj) in row.iter_mut().zip(u.iter()) {
                *qj -= s2 * uj.conj();
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re()).collect();
    // Phase matrix D turning the subdiagonal real and non-negative; absorb
    // it into Q column by column.
    let mut phase = one_like::<T>();
    let mut off = Vec::with_capacity(sub.len());
    for (k, &e) in sub.iter().enumerate() {
        phase = phase * e.unit_phase();
        off.push(e.norm_sqr().sqrt());
        for r in 0..n {
            q[r * n + k + 1] = q[r * n + k + 1] * phase;
        }
    }
    (diag, off, q)
}

fn one_like<T: Scalar>() -> T {
    // unit_phase of zero is one for every scalar type
    T::zero().unit_phase()
}

/// Implicit QL on a symmetric tridiagonal matrix.
///
/// `planes` hold the transposed starting basis (row `i` is basis vector `i`)
/// for each real plane of the eigenvector matrix; Givens rotations act on
/// pairs of rows. Eigenvalues are returned sorted ascending with the rows of
/// every plane permuted to match.
fn tql(diag: &[f64], off: &[f64], planes: &mut [&mut [f64]]) -> Result<Vec<f64>> {
    let n = diag.len();
    if diag.iter().chain(off).any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence { dim: n });
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS {
                    return Err(Error::NoConvergence { dim: n });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for plane in planes.iter_mut() {
                        rotate_rows(plane, n, i, c, s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    for plane in planes.iter_mut() {
        let old = plane.to_vec();
        for (dst, &src) in order.iter().enumerate() {
            plane[dst * n..(dst + 1) * n].copy_from_slice(&old[src * n..(src + 1) * n]);
        }
    }
    Ok(values)
}

#[inline]
fn rotate_rows(plane: &mut [f64], n: usize, i: usize, c: f64, s: f64) {
    let (lo, hi) = plane.split_at_mut((i + 1) * n);
    let ri = &mut lo[i * n..];
    let rj = &mut hi[..n];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

fn transpose_square(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = v[i * n + j];
        }
    }
    out
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix given by its
/// diagonal and first off-diagonal.
pub fn symmetric_tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, RMatrix)> {
    let n = diag.len();
    assert_eq!(
        off.len(),
        n.saturating_sub(1),
        "off-diagonal length must be n - 1"
    );
    let mut zt = RMatrix::identity(n).into_vec();
    let values = tql(diag, off, &mut [&mut zt])?;
    Ok((values, RMatrix::from_vec(n, n, transpose_square(&zt, n))))
}

/// Eigen-decomposition of a dense real symmetric matrix (lower triangle and
/// upper triangle are both read; the caller guarantees symmetry).
pub fn symmetric_eigen(a: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    let (diag, off, q) = tridiagonalize::<f64>(a.as_slice().to_vec(), n);
    let mut zt = transpose_square(&q, n);
    let values = tql(&diag, &off, &mut [&mut zt])?;
    Ok((values, RMatrix::from_vec(n, n, transpose_square(&zt, n))))
}

/// Eigen-decomposition of a dense complex Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    if a.is_real() {
        let (values, v) = symmetric_eigen(&a.re)?;
        return Ok((values, CMatrix::from_real(v)));
    }
    let dense: Vec<Complex64> = (0..n * n).map(|idx| a.get(idx / n, idx % n)).collect();
    let (diag, off, q) = tridiagonalize::<Complex64>(dense, n);
    let mut zr = vec![0.0; n * n];
    let mut zi = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            zr[j * n + i] = q[i * n + j].re;
            zi[j * n + i] = q[i * n + j].im;
        }
    }
    let values = tql(&diag, &off, &mut [&mut zr, &mut zi])?;
    let v = CMatrix::from_parts(
        RMatrix::from_vec(n, n, transpose_square(&zr, n)),
        RMatrix::from_vec(n, n, transpose_square(&zi, n)),
    );
    Ok((values, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cgemm, Op};

    fn reconstruct(values: &[f64], v: &CMatrix) -> CMatrix {
        let mut scaled = v.clone();
        for i in 0..v.rows() {
            for j in 0..v.cols() {
                scaled.set(i, j, v.get(i, j) * values[j]);
            }
        }
        cgemm(&scaled, Op::N, v, Op::H)
    }

    fn pseudo_random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(next(), 0.0));
            for j in 0..i {
                let z = Complex64::new(next(), next());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    #[test]
    fn complex_hermitian_reconstructs_and_is_unitary() {
        for &n in &[1usize, 2, 3, 7, 24] {
            let a = pseudo_random_hermitian(n, n as u64 + 3);
            let (values, v) = hermitian_eigen(&a).unwrap();
            assert!(values.windows(2).all(|w| w[0] <= w[1]));
            let err = reconstruct(&values, &v).max_abs_diff(&a);
            assert!(err < 1e-12, "n={n} reconstruction error {err}");
            let vv = cgemm(&v, Op::H, &v, Op::N);
            assert!(vv.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_two_by_two() {
        // [[0, -1/2], [-1/2, 0]] has eigenvalues ±1/2
        let (values, v) = symmetric_tridiagonal_eigen(&[0.0, 0.0], &[-0.5]).unwrap();
        assert!((values[0] + 0.5).abs() < 1e-15 && (values[1] - 0.5).abs() < 1e-15);
        let back = reconstruct(&values, &CMatrix::from_real(v));
        assert!((back.get(0, 1).re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_input_yields_sorted_diagonal_and_permutation() {
        let a = RMatrix::diagonal(&[0.5, -1.0, 0.25]);
        let (values, v) = symmetric_eigen(&a).unwrap();
        assert_eq!(values, vec![-1.0, 0.25, 0.5]);
        for j in 0..3 {
            let ones = (0..3).filter(|&i| v.get(i, j).abs() == 1.0).count();
            let zeros = (0..3).filter(|&i| v.get(i, j) == 0.0).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn non_finite_input_is_reported() {
        let err = symmetric_tridiagonal_eigen(&[f64::NAN, 1.0], &[1.0]).unwrap_err();
        assert_eq!(err, Error::NoConvergence { dim: 2 });
    }
}
