//! Total-spin sectors of `N` equivalent spins-1/2 and the collective
//! operators that act inside them.
//!
//! Within a sector of total spin `S` the basis is `|S, M⟩` with `M`
//! descending from `S` to `-S`; the coherence order of element `(row, col)`
//! is `M_row - M_col`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::{One, ToPrimitive, Zero};

use crate::linalg::{CMatrix, RMatrix};
use crate::{Error, Result};

/// An integer or half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInteger(i64);

impl HalfInteger {
    pub const fn from_twice(twice: i64) -> Self {
        Self(twice)
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// `N` equivalent spins-1/2 coupled by one averaged dipolar constant `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystem {
    n_spins: u32,
    coupling: f64,
}

impl SpinSystem {
    pub fn new(n_spins: u32, coupling: f64) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidSystem("at least one spin is required".into()));
        }
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "coupling must be positive and finite, got {coupling}"
            )));
        }
        Ok(Self { n_spins, coupling })
    }

    /// `D = 1`, so every time is dimensionless (`τ̄ = Dτ`, `t̄ = Dt`).
    pub fn dimensionless(n_spins: u32) -> Result<Self> {
        Self::new(n_spins, 1.0)
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Number of total-spin sectors, `⌊N/2⌋ + 1`.
    pub fn sector_count(&self) -> usize {
        self.n_spins as usize / 2 + 1
    }
}

/// One total-spin block, occurring `degeneracy` times in the full space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSector {
    total_spin: HalfInteger,
    degeneracy: BigUint,
    weight: f64,
}

impl SpinSector {
    pub fn total_spin(&self) -> HalfInteger {
        self.total_spin
    }

    pub fn dim(&self) -> usize {
        self.total_spin.twice() as usize + 1
    }

    /// Exact multiplicity `n_N(S)`.
    pub fn degeneracy(&self) -> &BigUint {
        &self.degeneracy
    }

    /// `n_N(S) / 2^N` as a float; safe for any `N` where the exact count is
    /// not.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Magnetic quantum numbers in basis order (descending).
    pub fn m_values(&self) -> Vec<HalfInteger> {
        let s2 = self.total_spin.twice();
        (0..self.dim() as i64)
            .map(|i| HalfInteger::from_twice(s2 - 2 * i))
            .collect()
    }

    /// Twice the `M` value of basis position `i`.
    #[inline]
    pub fn twice_m(&self, i: usize) -> i64 {
        self.total_spin.twice() - 2 * i as i64
    }

    /// `S(S + 1)`.
    pub fn casimir(&self) -> f64 {
        let s = self.total_spin.to_f64();
        s * (s + 1.0)
    }
}

/// `n_N(S) = N! (2S + 1) / ((N/2 + S + 1)! (N/2 - S)!)` in exact integer
/// arithmetic.
pub fn degeneracy(n_spins: u32, total_spin: HalfInteger) -> BigUint {
    let n = n_spins as i64;
    let s2 = total_spin.twice();
    assert!(
        s2 >= 0 && s2 <= n && (n - s2) % 2 == 0,
        "S = {total_spin} is not a total spin of {n_spins} spins"
    );
    let upper = ((n + s2) / 2) as u64; // N/2 + S
    let lower = ((n - s2) / 2) as u64; // N/2 - S
    factorial(n as u64) * BigUint::from((s2 + 1) as u64) / (factorial(upper + 1) * factorial(lower))
}

fn factorial(k: u64) -> BigUint {
    (2..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// `num / 2^pow` rounded to a float, without overflowing for large `pow`.
fn ratio_to_pow2(num: &BigUint, pow: u32) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits();
    let shift = bits.saturating_sub(64);
    let top = (num >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    let exp = shift as i64 - pow as i64;
    top * 2.0f64.powi(exp as i32)
}

/// All sectors of the system, largest `S` first.
pub fn enumerate_sectors(system: &SpinSystem) -> Vec<SpinSector> {
    let n = system.n_spins();
    let top = n as i64;
    let mut out = Vec::with_capacity(system.sector_count());
    let mut s2 = top;
    while s2 >= 0 {
        let total_spin = HalfInteger::from_twice(s2);
        let degeneracy = degeneracy(n, total_spin);
        let weight = ratio_to_pow2(&degeneracy, n);
        out.push(SpinSector {
            total_spin,
            degeneracy,
            weight,
        });
        s2 -= 2;
    }
    out
}

/// `4·Tr{I_z²}` over the full `2^N` space, exactly (the trace itself is a
/// quarter-integer for odd `N`).
pub fn iz_square_trace_quadrupled(sectors: &[SpinSector]) -> BigUint {
    // Σ_M (2M)² = t(t + 1)(t + 2) / 3 with t = 2S
    sectors
        .iter()
        .map(|sec| {
            let t = sec.total_spin.twice() as u64;
            sec.degeneracy.clone() * (t * (t + 1) * (t + 2) / 3)
        })
        .sum()
}

/// `Tr{I_z²} / 2^N`, accumulated block by block in floating point.
pub(crate) fn scaled_iz_square_trace(sectors: &[SpinSector]) -> f64 {
    sectors
        .iter()
        .map(|sec| {
            let m2: f64 = (0..sec.dim())
                .map(|i| {
                    let m = sec.twice_m(i) as f64 / 2.0;
                    m * m
                })
                .sum();
            sec.weight * m2
        })
        .sum()
}

/// Direction of a ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// One non-zero matrix element `⟨S, to| I± |S, from⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderElement {
    pub from: HalfInteger,
    pub to: HalfInteger,
    pub amplitude: f64,
}

/// `⟨M ± 1| I± |M⟩ = sqrt(S(S+1) - M(M ± 1))` for every `M` that stays in
/// range.
pub fn ladder_elements(total_spin: HalfInteger, direction: Ladder) -> Vec<LadderElement> {
    let s2 = total_spin.twice();
    assert!(s2 >= 0, "total spin must be non-negative");
    let step = match direction {
        Ladder::Raise => 2,
        Ladder::Lower => -2,
    };
    let mut out = Vec::new();
    let mut m2 = -s2;
    while m2 <= s2 {
        let to = m2 + step;
        if to.abs() <= s2 {
            out.push(LadderElement {
                from: HalfInteger::from_twice(m2),
                to: HalfInteger::from_twice(to),
                amplitude: raising_amplitude(s2, m2.min(to)),
            });
        }
        m2 += 2;
    }
    out
}

/// `sqrt(S(S+1) - M(M+1))` with both arguments given as twice their value;
/// computed in integers as `sqrt((2S - 2M)(2S + 2M + 2)) / 2`.
#[inline]
pub(crate) fn raising_amplitude(s2: i64, m2: i64) -> f64 {
    let prod = (s2 - m2) * (s2 + m2 + 2);
    (prod as f64).sqrt() / 2.0
}

/// `⟨M| H_MQ |M - 2⟩ = -(D/4) ⟨M|(I⁺)²|M - 2⟩` for the sector of twice-spin
/// `s2`, with `m2` twice the upper `M`.
#[inline]
pub(crate) fn hmq_element(s2: i64, m2: i64, coupling: f64) -> f64 {
    let a = ((s2 - m2 + 4) * (s2 + m2 - 2)) as i128;
    let b = ((s2 - m2 + 2) * (s2 + m2)) as i128;
    -coupling * ((a * b) as f64).sqrt() / 16.0
}

/// `(D/2)(3M² - S(S+1))`, the diagonal of `H_dz` (arguments doubled).
#[inline]
pub(crate) fn hdz_element(s2: i64, m2: i64, coupling: f64) -> f64 {
    let s = s2 as f64 / 2.0;
    let m = m2 as f64 / 2.0;
    0.5 * coupling * (3.0 * m * m - s * (s + 1.0))
}

/// A Hermitian operator that is block diagonal over total-spin sectors.
///
/// Each block is a dense `(2S + 1) × (2S + 1)` complex matrix indexed by the
/// sector's `M` values in descending order. Blocks appear in the same order
/// as [`enumerate_sectors`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    sectors: Arc<[SpinSector]>,
    blocks: Vec<CMatrix>,
}

impl BlockOperator {
    pub fn new(sectors: Arc<[SpinSector]>, blocks: Vec<CMatrix>) -> Result<Self> {
        if sectors.len() != blocks.len() {
            return Err(Error::SectorMismatch(format!(
                "{} sectors but {} blocks",
                sectors.len(),
                blocks.len()
            )));
        }
        for (sec, b) in sectors.iter().zip(&blocks) {
            if b.rows() != sec.dim() || b.cols() != sec.dim() {
                return Err(Error::SectorMismatch(format!(
                    "block for S = {} is {}x{}, expected {}x{}",
                    sec.total_spin(),
                    b.rows(),
                    b.cols(),
                    sec.dim(),
                    sec.dim()
                )));
            }
        }
        Ok(Self { sectors, blocks })
    }

    pub(crate) fn from_fn(
        sectors: Arc<[SpinSector]>,
        mut f: impl FnMut(&SpinSector) -> CMatrix,
    ) -> Self {
        let blocks = sectors.iter().map(&mut f).collect();
        Self { sectors, blocks }
    }

    pub fn sectors(&self) -> &[SpinSector] {
        &self.sectors
    }

    pub(crate) fn shared_sectors(&self) -> Arc<[SpinSector]> {
        Arc::clone(&self.sectors)
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, index: usize) -> &CMatrix {
        &self.blocks[index]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    pub(crate) fn same_structure(&self, other: &BlockOperator) -> bool {
        self.sectors.len() == other.sectors.len()
            && self
                .sectors
                .iter()
                .zip(other.sectors.iter())
                .all(|(a, b)| a.total_spin == b.total_spin)
    }

    /// Largest element-wise Hermiticity defect over all blocks.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(CMatrix::hermiticity_error)
            .fold(0.0, f64::max)
    }

    /// Per-block linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &BlockOperator, b: f64) -> Result<BlockOperator> {
        if !self.same_structure(other) {
            return Err(Error::SectorMismatch(
                "operands belong to different systems".into(),
            ));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| {
                let n = x.rows();
                CMatrix::from_fn(n, n, |i, j| x.get(i, j) * a + y.get(i, j) * b)
            })
            .collect();
        Ok(BlockOperator {
            sectors: self.shared_sectors(),
            blocks,
        })
    }

    /// `Σ_S n_N(S)/2^N · f(block)`; the degeneracy-weighted sum of a block
    /// functional, scaled by `2^-N`.
    pub fn weighted_sum(&self, mut f: impl FnMut(&CMatrix) -> Complex64) -> Complex64 {
        self.sectors
            .iter()
            .zip(&self.blocks)
            .map(|(sec, b)| f(b) * sec.weight())
            .sum()
    }
}

fn shared_sectors(system: &SpinSystem) -> Arc<[SpinSector]> {
    enumerate_sectors(system).into()
}

fn hmq_block(sec: &SpinSector, coupling: f64) -> RMatrix {
    let n = sec.dim();
    let s2 = sec.total_spin.twice();
    let mut m = RMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(2) {
        let v = hmq_element(s2, sec.twice_m(i), coupling);
        m.set(i, i + 2, v);
        m.set(i + 2, i, v);
    }
    m
}

fn hdz_block(sec: &SpinSector, coupling: f64) -> RMatrix {
    let s2 = sec.total_spin.twice();
    let diag: Vec<f64> = (0..sec.dim())
        .map(|i| hdz_element(s2, sec.twice_m(i), coupling))
        .collect();
    RMatrix::diagonal(&diag)
}

/// Averaged double-quantum Hamiltonian `-(D/4)[(I⁺)² + (I⁻)²]`.
pub fn build_hmq(system: &SpinSystem) -> BlockOperator {
    let d = system.coupling();
    BlockOperator::from_fn(shared_sectors(system), |sec| {
        CMatrix::from_real(hmq_block(sec, d))
    })
}

/// Secular dipolar Hamiltonian `(D/2)(3I_z² - I²)`.
pub fn build_hdz(system: &SpinSystem) -> BlockOperator {
    let d = system.coupling();
    BlockOperator::from_fn(shared_sectors(system), |sec| {
        CMatrix::from_real(hdz_block(sec, d))
    })
}

pub(crate) fn check_perturbation(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "0 <= p <= 1",
        })
    }
}

/// `H_eff(p) = (1 - p) H_MQ + p H_dz`.
pub fn build_heff(system: &SpinSystem, p: f64) -> Result<BlockOperator> {
    check_perturbation(p)?;
    let d = system.coupling();
    Ok(BlockOperator::from_fn(shared_sectors(system), |sec| {
        let mq = hmq_block(sec, d);
        let dz = hdz_block(sec, d);
        let n = sec.dim();
        CMatrix::from_real(RMatrix::from_fn(n, n, |i, j| {
            (1.0 - p) * mq.get(i, j) + p * dz.get(i, j)
        }))
    }))
}

/// Equilibrium state `ρ(0) = I_z`, unnormalized.
pub fn initial_density(system: &SpinSystem) -> BlockOperator {
    BlockOperator::from_fn(shared_sectors(system), |sec| {
        let diag: Vec<f64> = (0..sec.dim())
            .map(|i| sec.twice_m(i) as f64 / 2.0)
            .collect();
        CMatrix::from_real(RMatrix::diagonal(&diag))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn binomial(n: u64, k: u64) -> BigUint {
        (0..k).fold(BigUint::one(), |acc, i| acc * (n - i)) / factorial(k)
    }

    #[test]
    fn sectors_of_two_and_four_spins() {
        let two = enumerate_sectors(&SpinSystem::dimensionless(2).unwrap());
        let summary: Vec<_> = two
            .iter()
            .map(|s| (s.total_spin().twice(), s.degeneracy().to_u64().unwrap()))
            .collect();
        assert_eq!(summary, vec![(2, 1), (0, 1)]);

        let four = enumerate_sectors(&SpinSystem::dimensionless(4).unwrap());
        let summary: Vec<_> = four
            .iter()
            .map(|s| (s.total_spin().twice(), s.degeneracy().to_u64().unwrap()))
            .collect();
        assert_eq!(summary, vec![(4, 1), (2, 3), (0, 2)]);
    }

    #[test]
    fn closed_form_matches_binomial_difference_and_fills_hilbert_space() {
        // n_N(S) = C(N, N/2 - S) - C(N, N/2 - S - 1)
        for n in 1..=64u32 {
            let sectors = enumerate_sectors(&SpinSystem::dimensionless(n).unwrap());
            assert_eq!(sectors.len(), n as usize / 2 + 1);
            let mut total = BigUint::zero();
            for sec in &sectors {
                let lower = ((n as i64 - sec.total_spin().twice()) / 2) as u64;
                let expected = if lower == 0 {
                    BigUint::one()
                } else {
                    binomial(n as u64, lower) - binomial(n as u64, lower - 1)
                };
                assert_eq!(sec.degeneracy(), &expected, "N={n} S={}", sec.total_spin());
                total += sec.degeneracy() * BigUint::from(sec.dim() as u64);
            }
            assert_eq!(total, BigUint::one() << n as usize);
        }
    }

    #[test]
    fn large_systems_have_expected_sector_range() {
        let sectors = enumerate_sectors(&SpinSystem::dimensionless(201).unwrap());
        assert_eq!(sectors.len(), 101);
        assert_eq!(sectors[0].total_spin(), HalfInteger::from_twice(201));
        assert_eq!(sectors[100].total_spin(), HalfInteger::from_twice(1));

        let big = enumerate_sectors(&SpinSystem::dimensionless(601).unwrap());
        let sum: f64 = big.iter().map(|s| s.weight() * s.dim() as f64).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iz_square_trace_is_n_two_to_n_over_four() {
        for n in [1u32, 2, 7, 64, 201] {
            let sectors = enumerate_sectors(&SpinSystem::dimensionless(n).unwrap());
            let exact = iz_square_trace_quadrupled(&sectors);
            assert_eq!(exact, BigUint::from(n) << n as usize);
            let scaled = scaled_iz_square_trace(&sectors);
            assert!((scaled - n as f64 / 4.0).abs() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn ladder_elements_for_small_spins() {
        let half = ladder_elements(HalfInteger::from_twice(1), Ladder::Raise);
        assert_eq!(
            half,
            vec![LadderElement {
                from: HalfInteger::from_twice(-1),
                to: HalfInteger::from_twice(1),
                amplitude: 1.0
            }]
        );
        let one = ladder_elements(HalfInteger::from_twice(2), Ladder::Raise);
        assert_eq!(one.len(), 2);
        for el in &one {
            assert!((el.amplitude - 2f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(one[0].from.twice(), -2);
        assert_eq!(one[1].to.twice(), 2);
        // applying I+ twice to |1,-1> gives 2|1,1>
        assert!((one[0].amplitude * one[1].amplitude - 2.0).abs() < 1e-14);

        let down = ladder_elements(HalfInteger::from_twice(2), Ladder::Lower);
        assert_eq!(down.len(), 2);
        assert_eq!((down[0].from.twice(), down[0].to.twice()), (0, -2));
    }

    #[test]
    fn hamiltonian_blocks_for_spin_one() {
        let system = SpinSystem::dimensionless(2).unwrap();
        let hmq = build_hmq(&system);
        let b = hmq.block(0);
        assert_eq!(b.get(0, 2).re, -0.5);
        assert_eq!(b.get(2, 0).re, -0.5);
        for (i, j) in [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (1, 0)] {
            assert_eq!(b.get(i, j).re, 0.0);
        }
        assert_eq!(hmq.block(1).get(0, 0).re, 0.0);

        let hdz = build_hdz(&system);
        let d: Vec<f64> = (0..3).map(|i| hdz.block(0).get(i, i).re).collect();
        assert_eq!(d, vec![0.5, -1.0, 0.5]);

        let half = build_hdz(&SpinSystem::dimensionless(1).unwrap());
        assert_eq!(half.block(0).re, RMatrix::zeros(2, 2));
        let half_mq = build_hmq(&SpinSystem::dimensionless(1).unwrap());
        assert_eq!(half_mq.block(0).re, RMatrix::zeros(2, 2));
    }

    #[test]
    fn heff_interpolates() {
        let system = SpinSystem::dimensionless(6).unwrap();
        let mq = build_hmq(&system);
        let dz = build_hdz(&system);
        assert_eq!(build_heff(&system, 0.0).unwrap(), mq);
        assert_eq!(build_heff(&system, 1.0).unwrap(), dz);
        let p = 0.003;
        let mixed = build_heff(&system, p).unwrap();
        let manual = mq.combine(1.0 - p, &dz, p).unwrap();
        for (a, b) in mixed.blocks().iter().zip(manual.blocks()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
        assert!(build_heff(&system, 1.5).is_err());
        assert!(build_heff(&system, -0.1).is_err());
    }

    #[test]
    fn structural_properties_of_operators() {
        for n in [3u32, 8, 13] {
            let system = SpinSystem::dimensionless(n).unwrap();
            let hmq = build_hmq(&system);
            let hdz = build_hdz(&system);
            let rho = initial_density(&system);
            assert_eq!(hmq.blocks().len(), n as usize / 2 + 1);
            for op in [&hmq, &hdz, &rho] {
                assert!(op.hermiticity_error() < 1e-12);
            }
            for (sec, b) in hmq.sectors().iter().zip(hmq.blocks()) {
                for i in 0..sec.dim() {
                    for j in 0..sec.dim() {
                        if i.abs_diff(j) != 2 {
                            assert_eq!(b.get(i, j), Complex64::new(0.0, 0.0));
                        }
                    }
                }
            }
            for op in [&hdz, &rho] {
                for b in op.blocks() {
                    for i in 0..b.rows() {
                        for j in 0..b.cols() {
                            if i != j {
                                assert_eq!(b.get(i, j), Complex64::new(0.0, 0.0));
                            }
                        }
                    }
                }
            }
            for b in hdz.blocks() {
                let tr = b.trace().re;
                assert!(tr.abs() < 1e-12 * (1.0 + b.rows() as f64).powi(3));
            }
            let total: f64 = rho.weighted_sum(|b| b.trace()).re;
            assert!(total.abs() < 1e-14);
        }
    }

    #[test]
    fn initial_density_blocks() {
        let rho = initial_density(&SpinSystem::dimensionless(2).unwrap());
        let d: Vec<f64> = (0..3).map(|i| rho.block(0).get(i, i).re).collect();
        assert_eq!(d, vec![1.0, 0.0, -1.0]);
        let rho1 = initial_density(&SpinSystem::dimensionless(1).unwrap());
        assert_eq!(rho1.block(0).get(0, 0).re, 0.5);
        assert_eq!(rho1.block(0).get(1, 1).re, -0.5);
    }

    #[test]
    fn invalid_systems_are_rejected() {
        assert!(SpinSystem::new(0, 1.0).is_err());
        assert!(SpinSystem::new(3, 0.0).is_err());
        assert!(SpinSystem::new(3, f64::NAN).is_err());
    }
}
