//! Sector kernels: evolve `I_z` inside one total-spin block and reduce the
//! result to coherence-order sums.
//!
//! A block of `H_eff` only couples `M` to `M ± 2`, so it splits into two
//! parity parts (even and odd positions in the descending-`M` basis). Each
//! part is a real symmetric tridiagonal matrix in the compressed index `j`
//! (position `parity + 2j`). For the pure double-quantum Hamiltonian the
//! diagonal vanishes and the part is bipartite between even and odd `j`
//! (the two sublattices `e` and `o`): the evolved state is then real on the
//! `ee` and `oo` blocks and imaginary on `eo`, and it can be propagated from
//! the singular vectors of the `e`-`o` coupling at a fraction of the dense
//! cost.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{gemm, symmetric_tridiagonal_eigen, MatRef, RMatrix};
use crate::par;
use crate::spin::{hdz_element, hmq_element, SpinSector};
use crate::Result;

/// Time points handled by one parallel task. Fixed so the reduction order
/// does not depend on the pool size.
pub(crate) const CHUNK: usize = 64;

/// Largest tolerated deviation of a sublattice weight from 1/2 before the
/// chiral factorization is abandoned for the dense one.
const CHIRAL_TOL: f64 = 1e-9;

/// One parity part of a sector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Part {
    s2: i64,
    parity: usize,
    len: usize,
}

impl Part {
    fn n_e(&self) -> usize {
        self.len.div_ceil(2)
    }

    fn n_o(&self) -> usize {
        self.len / 2
    }

    /// Sector position of compressed index `j`.
    #[inline]
    fn pos(&self, j: usize) -> usize {
        self.parity + 2 * j
    }

    #[inline]
    fn twice_m(&self, j: usize) -> i64 {
        self.s2 - 2 * self.pos(j) as i64
    }

    fn magnetization(&self, j: usize) -> f64 {
        self.twice_m(j) as f64 / 2.0
    }

    fn tridiagonal(&self, coupling: f64, p: f64) -> (Vec<f64>, Vec<f64>) {
        let diag = (0..self.len)
            .map(|j| {
                if p == 0.0 {
                    0.0
                } else {
                    p * hdz_element(self.s2, self.twice_m(j), coupling)
                }
            })
            .collect();
        let off = (0..self.len.saturating_sub(1))
            .map(|j| (1.0 - p) * hmq_element(self.s2, self.twice_m(j), coupling))
            .collect();
        (diag, off)
    }
}

/// Evolved state of one part split by sublattice: real `ee` and `oo`
/// blocks and the imaginary part of the `eo` block.
///
/// For a state evolved under `H_MQ` the remaining components vanish. For a
/// general `H_eff` this is the projection that survives an overlap with
/// such a state.
#[derive(Debug, Clone)]
pub(crate) struct Sublattice {
    pub ee: RMatrix,
    pub oo: RMatrix,
    pub eo: RMatrix,
}

impl Sublattice {
    fn zeros(part: &Part) -> Self {
        let (ne, no) = (part.n_e(), part.n_o());
        Self {
            ee: RMatrix::zeros(ne, ne),
            oo: RMatrix::zeros(no, no),
            eo: RMatrix::zeros(ne, no),
        }
    }

    fn add_weighted_squares(&mut self, other: &Sublattice, w: f64) {
        for (dst, src) in [
            (&mut self.ee, &other.ee),
            (&mut self.oo, &other.oo),
            (&mut self.eo, &other.eo),
        ] {
            for (d, s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
                *d += w * s * s;
            }
        }
    }

    fn add(&mut self, other: &Sublattice) {
        for (dst, src) in [
            (&mut self.ee, &other.ee),
            (&mut self.oo, &other.oo),
            (&mut self.eo, &other.eo),
        ] {
            for (d, s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
                *d += s;
            }
        }
    }
}

/// `left · mid · rightᵀ`.
fn sandwich(left: MatRef<'_>, mid: &RMatrix, right: MatRef<'_>) -> RMatrix {
    let mut tmp = RMatrix::zeros(mid.rows(), right.rows());
    gemm(1.0, mid.view(), right.t(), 0.0, tmp.view_mut());
    let mut out = RMatrix::zeros(left.rows(), right.rows());
    gemm(1.0, left, tmp.view(), 0.0, out.view_mut());
    out
}

/// `vᵀ · diag(l) · v`.
fn congruence(v: &RMatrix, l: &[f64]) -> RMatrix {
    let n = v.rows();
    let scaled = RMatrix::from_fn(n, v.cols(), |i, a| l[i] * v.get(i, a));
    let mut out = RMatrix::zeros(v.cols(), v.cols());
    gemm(1.0, v.view().t(), scaled.view(), 0.0, out.view_mut());
    out
}

fn sincos(values: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>) {
    values
        .iter()
        .map(|&l| ((l * tau).cos(), (l * tau).sin()))
        .unzip()
}

/// Propagation of a bipartite part from the singular triplets of its
/// `e`-`o` coupling. The columns of `x` are the left singular vectors (plus
/// the zero mode in the last column when `n_e > n_o`), the columns of `y`
/// the right ones.
#[derive(Debug, Clone)]
struct Chiral {
    x: RMatrix,
    y: RMatrix,
    sigma: Vec<f64>,
    g: RMatrix,
    k: RMatrix,
}

impl Chiral {
    fn from_eigen(part: &Part, values: &[f64], v: &RMatrix) -> Option<Self> {
        let (ne, no) = (part.n_e(), part.n_o());
        let root2 = core::f64::consts::SQRT_2;
        let mut x = RMatrix::zeros(ne, ne);
        let mut y = RMatrix::zeros(no, no);
        let mut sigma = Vec::with_capacity(no);
        for a in 0..no {
            let col = ne + a;
            let s = values[col];
            if !(s > 0.0) {
                return None;
            }
            let even: f64 = (0..ne).map(|m| v.get(2 * m, col).powi(2)).sum();
            if (even - 0.5).abs() > CHIRAL_TOL {
                return None;
            }
            for m in 0..ne {
                x.set(m, a, root2 * v.get(2 * m, col));
            }
            for m in 0..no {
                y.set(m, a, root2 * v.get(2 * m + 1, col));
            }
            sigma.push(s);
        }
        if ne > no {
            let col = no;
            let odd: f64 = (0..no).map(|m| v.get(2 * m + 1, col).powi(2)).sum();
            if odd > CHIRAL_TOL {
                return None;
            }
            for m in 0..ne {
                x.set(m, ne - 1, v.get(2 * m, col));
            }
        }
        let l_e: Vec<f64> = (0..ne).map(|m| part.magnetization(2 * m)).collect();
        let l_o: Vec<f64> = (0..no).map(|m| part.magnetization(2 * m + 1)).collect();
        let g = congruence(&x, &l_e);
        let k = congruence(&y, &l_o);
        Some(Self { x, y, sigma, g, k })
    }

    fn sublattice(&self, tau: f64) -> Sublattice {
        let (ne, no) = (self.x.rows(), self.y.rows());
        let (mut s, mut c) = (vec![0.0; ne], vec![1.0; ne]);
        for (a, &sg) in self.sigma.iter().enumerate() {
            c[a] = (sg * tau).cos();
            s[a] = (sg * tau).sin();
        }
        let g = &self.g;
        let k = &self.k;
        let w_ee = RMatrix::from_fn(ne, ne, |a, b| {
            let mut w = c[a] * g.get(a, b) * c[b];
            if a < no && b < no {
                w += s[a] * k.get(a, b) * s[b];
            }
            w
        });
        let w_oo = RMatrix::from_fn(no, no, |a, b| {
            s[a] * g.get(a, b) * s[b] + c[a] * k.get(a, b) * c[b]
        });
        let w_eo = RMatrix::from_fn(ne, no, |a, b| {
            let mut w = c[a] * g.get(a, b) * s[b];
            if a < no {
                w -= s[a] * k.get(a, b) * c[b];
            }
            w
        });
        Sublattice {
            ee: sandwich(self.x.view(), &w_ee, self.x.view()),
            oo: sandwich(self.y.view(), &w_oo, self.y.view()),
            eo: sandwich(self.x.view(), &w_eo, self.y.view()),
        }
    }
}

/// Propagation of a general part in its eigenbasis: `ρ = V (C ∘ Φ) Vᵀ`
/// with `C = Vᵀ L V` and `Φ_ab = exp(-i (λ_a - λ_b) τ)`.
#[derive(Debug, Clone)]
struct Dense {
    v: RMatrix,
    lambda: Vec<f64>,
    c: RMatrix,
}

impl Dense {
    fn new(part: &Part, lambda: Vec<f64>, v: RMatrix) -> Self {
        let l: Vec<f64> = (0..part.len).map(|j| part.magnetization(j)).collect();
        let c = congruence(&v, &l);
        Self { v, lambda, c }
    }

    /// `C ∘ cos Δ` and `C ∘ sin Δ` with `Δ_ab = (λ_a - λ_b) τ`.
    fn phased(&self, tau: f64) -> (RMatrix, RMatrix) {
        let n = self.lambda.len();
        let (cs, sn) = sincos(&self.lambda, tau);
        let mut ac = RMatrix::zeros(n, n);
        let mut as_ = RMatrix::zeros(n, n);
        for a in 0..n {
            let crow = self.c.row(a);
            let (ca, sa) = (cs[a], sn[a]);
            let rc = ac.row_mut(a);
            for b in 0..n {
                rc[b] = crow[b] * (ca * cs[b] + sa * sn[b]);
            }
            let rs = as_.row_mut(a);
            for b in 0..n {
                rs[b] = crow[b] * (sa * cs[b] - ca * sn[b]);
            }
        }
        (ac, as_)
    }

    fn even_rows(&self) -> MatRef<'_> {
        let n = self.v.cols();
        MatRef::new(self.v.as_slice(), n.div_ceil(2), n, 2 * n, 1)
    }

    fn odd_rows(&self) -> MatRef<'_> {
        let n = self.v.cols();
        if n < 2 {
            return MatRef::new(&[], 0, n, 2 * n, 1);
        }
        MatRef::new(&self.v.as_slice()[n..], n / 2, n, 2 * n, 1)
    }

    fn sublattice(&self, tau: f64) -> Sublattice {
        let n = self.lambda.len();
        let (ne, no) = (n.div_ceil(2), n / 2);
        let (ac, as_) = self.phased(tau);
        let (ve, vo) = (self.even_rows(), self.odd_rows());

        let mut t1 = RMatrix::zeros(n, n);
        gemm(1.0, ac.view(), self.v.view().t(), 0.0, t1.view_mut());
        let t1_even = MatRef::new(t1.as_slice(), n, ne, n, 2);
        let mut ee = RMatrix::zeros(ne, ne);
        gemm(1.0, ve, t1_even, 0.0, ee.view_mut());
        let mut oo = RMatrix::zeros(no, no);
        if no > 0 {
            let t1_odd = MatRef::new(&t1.as_slice()[1..], n, no, n, 2);
            gemm(1.0, vo, t1_odd, 0.0, oo.view_mut());
        }

        let mut t2 = RMatrix::zeros(n, no);
        gemm(1.0, as_.view(), vo.t(), 0.0, t2.view_mut());
        let mut eo = RMatrix::zeros(ne, no);
        gemm(-1.0, ve, t2.view(), 0.0, eo.view_mut());
        Sublattice { ee, oo, eo }
    }

    fn full(&self, tau: f64) -> (RMatrix, RMatrix) {
        let (ac, as_) = self.phased(tau);
        let v = self.v.view();
        let mut im = sandwich(v, &as_, v);
        im.as_mut_slice().iter_mut().for_each(|x| *x = -*x);
        (sandwich(v, &ac, v), im)
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Chiral(Chiral),
    Dense(Dense),
}

/// All parts of one sector, ready to be evolved to any time.
///
/// When the dimension is even (half-integer `S`) the spin flip `M → -M`
/// maps one parity part onto the other and both Hamiltonians are invariant
/// under it, so `ρ_{-M,-M'} = -ρ_{M,M'}`. Only the even part is then
/// propagated and the odd part is read off by reflection.
#[derive(Debug, Clone)]
pub(crate) struct SectorKernel {
    dim: usize,
    mirrored: bool,
    parts: Vec<(Part, Kernel)>,
}

impl SectorKernel {
    /// Factorizes the sector block of `H_eff(p)`; `p = 0` is the pure
    /// double-quantum Hamiltonian and uses the chiral path when it is
    /// numerically safe.
    pub(crate) fn new(sector: &SpinSector, coupling: f64, p: f64) -> Result<Self> {
        let dim = sector.dim();
        let s2 = sector.total_spin().twice();
        let mirrored = dim % 2 == 0;
        let mut parts = Vec::with_capacity(2);
        for parity in 0..if mirrored { 1 } else { 2 } {
            let len = (dim + 1 - parity) / 2;
            if len == 0 {
                continue;
            }
            let part = Part { s2, parity, len };
            let (diag, off) = part.tridiagonal(coupling, p);
            let (values, vectors) = symmetric_tridiagonal_eigen(&diag, &off)?;
            let chiral = if p == 0.0 {
                Chiral::from_eigen(&part, &values, &vectors)
            } else {
                None
            };
            let kernel = match chiral {
                Some(c) => Kernel::Chiral(c),
                None => Kernel::Dense(Dense::new(&part, values, vectors)),
            };
            parts.push((part, kernel));
        }
        Ok(Self {
            dim,
            mirrored,
            parts,
        })
    }

    /// Calls `f(i, j, v)` and, for a mirrored kernel, `f` again on the
    /// reflected element with the same value.
    #[inline]
    fn emit(&self, i: usize, j: usize, v: f64, f: &mut impl FnMut(usize, usize, f64)) {
        f(i, j, v);
        if self.mirrored {
            f(self.dim - 1 - i, self.dim - 1 - j, v);
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    #[cfg(test)]
    fn is_chiral(&self) -> bool {
        self.parts
            .iter()
            .all(|(_, k)| matches!(k, Kernel::Chiral(_)))
    }

    pub(crate) fn sublattices(&self, tau: f64) -> Vec<Sublattice> {
        self.parts
            .iter()
            .map(|(_, k)| match k {
                Kernel::Chiral(c) => c.sublattice(tau),
                Kernel::Dense(d) => d.sublattice(tau),
            })
            .collect()
    }

    /// Full evolved state as `(re, im)` planes over sector positions.
    pub(crate) fn state(&self, tau: f64) -> (RMatrix, RMatrix) {
        let mut re = RMatrix::zeros(self.dim, self.dim);
        let mut im = RMatrix::zeros(self.dim, self.dim);
        for (part, kernel) in &self.parts {
            match kernel {
                Kernel::Chiral(c) => {
                    visit_sublattice(part, &c.sublattice(tau), |i, j, v, imag| {
                        if imag {
                            im.set(i, j, v);
                        } else {
                            re.set(i, j, v);
                        }
                    });
                }
                Kernel::Dense(d) => {
                    let (pr, pi) = d.full(tau);
                    for a in 0..part.len {
                        for b in 0..part.len {
                            re.set(part.pos(a), part.pos(b), pr.get(a, b));
                            im.set(part.pos(a), part.pos(b), pi.get(a, b));
                        }
                    }
                }
            }
        }
        if self.mirrored {
            let last = self.dim - 1;
            for i in (1..self.dim).step_by(2) {
                for j in (1..self.dim).step_by(2) {
                    re.set(i, j, -re.get(last - i, last - j));
                    im.set(i, j, -im.get(last - i, last - j));
                }
            }
        }
        (re, im)
    }

    fn parts(&self) -> impl Iterator<Item = &Part> {
        self.parts.iter().map(|(p, _)| p)
    }
}

/// Calls `f(row, col, value, is_imaginary)` for every stored element of a
/// sublattice state, in sector positions. The `oe` block is generated from
/// `eo` by Hermiticity.
fn visit_sublattice(part: &Part, sub: &Sublattice, mut f: impl FnMut(usize, usize, f64, bool)) {
    let (ne, no) = (part.n_e(), part.n_o());
    for a in 0..ne {
        for b in 0..ne {
            f(part.pos(2 * a), part.pos(2 * b), sub.ee.get(a, b), false);
        }
    }
    for a in 0..no {
        for b in 0..no {
            f(
                part.pos(2 * a + 1),
                part.pos(2 * b + 1),
                sub.oo.get(a, b),
                false,
            );
        }
    }
    for a in 0..ne {
        for b in 0..no {
            let v = sub.eo.get(a, b);
            f(part.pos(2 * a), part.pos(2 * b + 1), v, true);
            f(part.pos(2 * b + 1), part.pos(2 * a), -v, true);
        }
    }
}

/// Calls `f(row, col, x·y)` for corresponding elements of two sublattice
/// states; this is `Re(x conj(y))` element by element.
fn visit_products(
    part: &Part,
    x: &Sublattice,
    y: &Sublattice,
    mut f: impl FnMut(usize, usize, f64),
) {
    let (ne, no) = (part.n_e(), part.n_o());
    for a in 0..ne {
        for b in 0..ne {
            f(
                part.pos(2 * a),
                part.pos(2 * b),
                x.ee.get(a, b) * y.ee.get(a, b),
            );
        }
    }
    for a in 0..no {
        for b in 0..no {
            let v = x.oo.get(a, b) * y.oo.get(a, b);
            f(part.pos(2 * a + 1), part.pos(2 * b + 1), v);
        }
    }
    for a in 0..ne {
        for b in 0..no {
            let v = x.eo.get(a, b) * y.eo.get(a, b);
            f(part.pos(2 * a), part.pos(2 * b + 1), v);
            f(part.pos(2 * b + 1), part.pos(2 * a), v);
        }
    }
}

/// Coherence order and `M + M'` of sector positions `(i, j)`.
#[inline]
pub(crate) fn order_and_sum(s2: i64, i: usize, j: usize) -> (i64, i64) {
    (j as i64 - i as i64, s2 - i as i64 - j as i64)
}

/// Time-weighted sums `Σ_τ w(τ) |ρ(τ)|²` for every element of a sector,
/// returned per part. The τ points are split into fixed chunks that run in
/// parallel and are added back in chunk order.
pub(crate) fn weighted_squares(
    kernel: &SectorKernel,
    taus: &[f64],
    weights: &[f64],
) -> Vec<Sublattice> {
    let chunks = taus.len().div_ceil(CHUNK);
    let partials = par::map_indexed(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(taus.len());
        let mut acc: Vec<Sublattice> = kernel.parts().map(Sublattice::zeros).collect();
        for i in lo..hi {
            for (a, s) in acc.iter_mut().zip(kernel.sublattices(taus[i])) {
                a.add_weighted_squares(&s, weights[i]);
            }
        }
        acc
    });
    let mut out: Vec<Sublattice> = kernel.parts().map(Sublattice::zeros).collect();
    for partial in &partials {
        for (o, p) in out.iter_mut().zip(partial) {
            o.add(p);
        }
    }
    out
}

/// Scatters per-element sums into `table[(k, q)]` through `f(k, q, value)`.
pub(crate) fn scatter_squares(
    kernel: &SectorKernel,
    s2: i64,
    sums: &[Sublattice],
    mut f: impl FnMut(i64, i64, f64),
) {
    for (part, sub) in kernel.parts().zip(sums) {
        // `eo` already holds squares, so the mirrored element keeps its sign.
        let (ne, no) = (part.n_e(), part.n_o());
        let mut put = |i: usize, j: usize, v: f64| {
            let (k, q) = order_and_sum(s2, i, j);
            f(k, q, v);
        };
        let mut emit = |i: usize, j: usize, v: f64| kernel.emit(i, j, v, &mut put);
        for a in 0..ne {
            for b in 0..ne {
                emit(part.pos(2 * a), part.pos(2 * b), sub.ee.get(a, b));
            }
        }
        for a in 0..no {
            for b in 0..no {
                emit(part.pos(2 * a + 1), part.pos(2 * b + 1), sub.oo.get(a, b));
            }
        }
        for a in 0..ne {
            for b in 0..no {
                let v = sub.eo.get(a, b);
                emit(part.pos(2 * a), part.pos(2 * b + 1), v);
                emit(part.pos(2 * b + 1), part.pos(2 * a), v);
            }
        }
    }
}

/// How the perturbed state is paired with a partner in experiment B.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Partner<'a> {
    /// Overlap with the state evolved by this (ideal) kernel.
    Ideal(&'a SectorKernel),
    /// Overlap of the perturbed state with itself.
    Matched,
}

/// Sector contributions `Σ_{M - M' = k} Re(ρ̃_MM' conj(partner_MM'))` for
/// every τ, as rows of `2 n_spins + 1` orders (index `k + n_spins`).
pub(crate) fn overlap_sweep(
    perturbed: &SectorKernel,
    partner: Partner<'_>,
    s2: i64,
    n_spins: usize,
    taus: &[f64],
) -> Vec<f64> {
    let width = 2 * n_spins + 1;
    let chunks = taus.len().div_ceil(CHUNK);
    let partials = par::map_indexed(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(taus.len());
        let mut rows = vec![0.0; (hi - lo) * width];
        for (r, &tau) in taus[lo..hi].iter().enumerate() {
            let row = &mut rows[r * width..(r + 1) * width];
            overlap_at(perturbed, partner, s2, n_spins, tau, row);
        }
        rows
    });
    partials.concat()
}

/// One row of [`overlap_sweep`], added into `row`.
pub(crate) fn overlap_at(
    perturbed: &SectorKernel,
    partner: Partner<'_>,
    s2: i64,
    n_spins: usize,
    tau: f64,
    row: &mut [f64],
) {
    let mut put = |i: usize, j: usize, v: f64| {
        let (k, _) = order_and_sum(s2, i, j);
        row[(k + n_spins as i64) as usize] += v;
    };
    match partner {
        Partner::Ideal(ideal) => {
            let x = perturbed.sublattices(tau);
            let y = if core::ptr::eq(ideal, perturbed) {
                x.clone()
            } else {
                ideal.sublattices(tau)
            };
            let mut add = |i: usize, j: usize, v: f64| perturbed.emit(i, j, v, &mut put);
            for ((part, xs), ys) in perturbed.parts().zip(&x).zip(&y) {
                visit_products(part, xs, ys, &mut add);
            }
        }
        Partner::Matched => {
            let (re, im) = perturbed.state(tau);
            let d = perturbed.dim();
            for i in 0..d {
                for j in 0..d {
                    let (a, b) = (re.get(i, j), im.get(i, j));
                    if a != 0.0 || b != 0.0 {
                        put(i, j, a * a + b * b);
                    }
                }
            }
        }
    }
}
