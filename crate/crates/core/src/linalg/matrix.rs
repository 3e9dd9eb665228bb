use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn view(&self) -> MatRef<'_> {
        MatRef {
            data: &self.data,
            rows: self.rows,
            cols: self.cols,
            rs: self.cols,
            cs: 1,
        }
    }

    pub fn view_mut(&mut self) -> MatMut<'_> {
        MatMut {
            rows: self.rows,
            cols: self.cols,
            rs: self.cols,
            cs: 1,
            data: &mut self.data,
        }
    }

    pub fn matmul(&self, other: &RMatrix) -> RMatrix {
        let mut out = RMatrix::zeros(self.rows, other.cols);
        gemm(1.0, self.view(), other.view(), 0.0, out.view_mut());
        out
    }

    /// Largest absolute element-wise difference.
    pub fn max_abs_diff(&self, other: &RMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| f64::max(acc, (a - b).abs()))
    }
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Dense complex matrix stored as two real planes.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    pub re: RMatrix,
    pub im: RMatrix,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            re: RMatrix::zeros(rows, cols),
            im: RMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real(RMatrix::identity(n))
    }

    pub fn from_real(re: RMatrix) -> Self {
        let im = RMatrix::zeros(re.rows(), re.cols());
        Self { re, im }
    }

    pub fn from_parts(re: RMatrix, im: RMatrix) -> Self {
        assert_eq!((re.rows(), re.cols()), (im.rows(), im.cols()));
        Self { re, im }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, f(i, j));
            }
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.re.rows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.re.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re.get(i, j), self.im.get(i, j))
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.re.set(i, j, v.re);
        self.im.set(i, j, v.im);
    }

    pub fn is_real(&self) -> bool {
        self.im.as_slice().iter().all(|&x| x == 0.0)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut im = self.im.transpose();
        im.as_mut_slice().iter_mut().for_each(|x| *x = -*x);
        Self {
            re: self.re.transpose(),
            im,
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        cgemm(self, Op::N, other, Op::N)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows().min(self.cols()))
            .map(|i| self.get(i, i))
            .sum()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        let mut acc: f64 = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                acc = acc.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        acc
    }

    /// Largest element-wise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let mut acc: f64 = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                acc = acc.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        let s: f64 = self
            .re
            .as_slice()
            .iter()
            .chain(self.im.as_slice())
            .map(|x| x * x)
            .sum();
        num_traits::Float::sqrt(s)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            let row: Vec<Complex64> = (0..self.cols()).map(|j| self.get(i, j)).collect();
            writeln!(f, "  {:?}", row)?;
        }
        write!(f, "]")
    }
}

/// Borrowed strided view of a real matrix.
#[derive(Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a> MatRef<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        assert!(
            fits(data.len(), rows, cols, rs, cs),
            "view exceeds its slice"
        );
        Self {
            data,
            rows,
            cols,
            rs,
            cs,
        }
    }

    pub fn t(self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
            ..self
        }
    }

    /// Sub-block starting at `(r0, c0)` with the given shape.
    pub fn block(self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(
            r0 + rows <= self.rows && c0 + cols <= self.cols,
            "block out of range"
        );
        if rows == 0 || cols == 0 {
            return Self {
                data: &[],
                rows,
                cols,
                ..self
            };
        }
        let start = r0 * self.rs + c0 * self.cs;
        Self::new(&self.data[start..], rows, cols, self.rs, self.cs)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.rs + j * self.cs]
    }
}

/// Mutable strided view of a real matrix.
pub struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a> MatMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        assert!(
            fits(data.len(), rows, cols, rs, cs),
            "view exceeds its slice"
        );
        Self {
            data,
            rows,
            cols,
            rs,
            cs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

fn fits(len: usize, rows: usize, cols: usize, rs: usize, cs: usize) -> bool {
    rows == 0 || cols == 0 || (rows - 1) * rs + (cols - 1) * cs < len
}

/// `c ← alpha · a · b + beta · c`.
pub fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: MatMut<'_>) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!((a.rows, b.cols), (c.rows, c.cols), "output shape mismatch");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                let x = &mut c.data[i * c.rs + j * c.cs];
                *x = if beta == 0.0 { 0.0 } else { beta * *x };
            }
        }
        return;
    }
    // SAFETY: the three views were bounds-checked on construction, shapes
    // agree, and `c` is uniquely borrowed, so every address dgemm touches is
    // inside its slice and the output does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.data.as_mut_ptr(),
            c.rs as isize,
            c.cs as isize,
        );
    }
}

/// Operand transformation for [`cgemm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// As is.
    N,
    /// Transpose.
    T,
    /// Conjugate transpose.
    H,
}

fn apply_op<'a>(m: &'a CMatrix, op: Op) -> (MatRef<'a>, MatRef<'a>, f64) {
    match op {
        Op::N => (m.re.view(), m.im.view(), 1.0),
        Op::T => (m.re.view().t(), m.im.view().t(), 1.0),
        Op::H => (m.re.view().t(), m.im.view().t(), -1.0),
    }
}

/// Complex product `op(a) · op(b)` through four real products.
pub fn cgemm(a: &CMatrix, op_a: Op, b: &CMatrix, op_b: Op) -> CMatrix {
    let (ar, ai, sa) = apply_op(a, op_a);
    let (br, bi, sb) = apply_op(b, op_b);
    let mut out = CMatrix::zeros(ar.rows(), br.cols());
    gemm(1.0, ar, br, 0.0, out.re.view_mut());
    gemm(-sa * sb, ai, bi, 1.0, out.re.view_mut());
    gemm(sb, ar, bi, 0.0, out.im.view_mut());
    gemm(sa, ai, br, 1.0, out.im.view_mut());
    out
}
