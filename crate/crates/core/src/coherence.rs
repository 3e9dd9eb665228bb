//! Coherence orders, MQ intensity spectra and the Fourier-area sum.
//!
//! Intensities are normalized by `Tr{I_z²}` so that `Σ_k J_k(τ, 0) = 1`.
//! Orders are stored for `k = -N..=N`; index `k + N` in every buffer.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::engine::{overlap_sweep, scatter_squares, weighted_squares, Partner, SectorKernel};
use crate::linalg::CMatrix;
use crate::spin::{
    check_perturbation, enumerate_sectors, hdz_element, scaled_iz_square_trace, BlockOperator,
    SpinSystem,
};
use crate::{Complex64, Error, Result};

/// `Tr{I_z²} = N 2^N / 4` as a float (infinite beyond about 1000 spins).
fn iz_trace_value(n_spins: u32) -> f64 {
    n_spins as f64 * 2f64.powi(n_spins as i32 - 2)
}

/// Intensities `J_k` for every order `k ∈ [-N, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSpectrum {
    n_spins: u32,
    intensities: Vec<f64>,
    normalization: f64,
}

impl CoherenceSpectrum {
    /// Wraps `2N + 1` intensities ordered from `k = -N` to `k = N`.
    pub fn new(n_spins: u32, intensities: Vec<f64>) -> Result<Self> {
        if intensities.len() != 2 * n_spins as usize + 1 {
            return Err(Error::InvalidCurve(alloc::format!(
                "expected {} orders, got {}",
                2 * n_spins + 1,
                intensities.len()
            )));
        }
        Ok(Self {
            n_spins,
            intensities,
            normalization: iz_trace_value(n_spins),
        })
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    /// The `Tr{I_z²}` the intensities were divided by.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn orders(&self) -> core::ops::RangeInclusive<i64> {
        -(self.n_spins as i64)..=self.n_spins as i64
    }

    /// `J_k`; zero outside `[-N, N]`.
    pub fn intensity(&self, k: i64) -> f64 {
        let n = self.n_spins as i64;
        if k.abs() > n {
            0.0
        } else {
            self.intensities[(k + n) as usize]
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.intensities
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.orders().zip(self.intensities.iter().copied())
    }

    /// `Σ_k J_k`.
    pub fn total(&self) -> f64 {
        self.intensities.iter().sum()
    }

    /// `max_k |J_k - J_{-k}|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n_spins as i64;
        (1..=n)
            .map(|k| (self.intensity(k) - self.intensity(-k)).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every odd order is exactly zero.
    pub fn odd_orders_vanish(&self) -> bool {
        self.iter()
            .filter(|(k, _)| k % 2 != 0)
            .all(|(_, j)| j == 0.0)
    }
}

/// Keeps the elements of order `k` (`M_row - M_col = k`) and zeroes the rest.
pub fn coherence_component(rho: &BlockOperator, k: i64) -> BlockOperator {
    let blocks = rho
        .blocks()
        .iter()
        .map(|b| {
            let n = b.rows();
            CMatrix::from_fn(n, n, |i, j| {
                if j as i64 - i as i64 == k {
                    b.get(i, j)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    BlockOperator::new(rho.shared_sectors(), blocks).expect("same block shapes")
}

/// Evolution under the diagonal `H_dz` for time `t`: element `(M, M')`
/// picks up `e^{-i(E_M - E_M')t}`.
pub fn dephase(rho: &BlockOperator, system: &SpinSystem, t: f64) -> Result<BlockOperator> {
    let d = system.coupling();
    let blocks = rho
        .sectors()
        .iter()
        .zip(rho.blocks())
        .map(|(sec, b)| {
            let s2 = sec.total_spin().twice();
            let e: Vec<f64> = (0..sec.dim())
                .map(|i| hdz_element(s2, sec.twice_m(i), d))
                .collect();
            let n = b.rows();
            CMatrix::from_fn(n, n, |i, j| {
                b.get(i, j) * Complex64::from_polar(1.0, -(e[i] - e[j]) * t)
            })
        })
        .collect();
    BlockOperator::new(rho.shared_sectors(), blocks)
}

/// `J_k = Σ_S n_N(S) Tr_S{ρ_k partner_{-k}} / Tr{I_z²}` by direct summation
/// over block elements (real part).
pub fn intensities(rho: &BlockOperator, partner: &BlockOperator) -> Result<CoherenceSpectrum> {
    if rho.sectors().len() != partner.sectors().len() {
        return Err(Error::SectorMismatch(
            "operands belong to different systems".into(),
        ));
    }
    let n_spins = rho.sectors()[0].total_spin().twice() as u32;
    let z = scaled_iz_square_trace(rho.sectors());
    let n = n_spins as i64;
    let mut out = vec![0.0; 2 * n_spins as usize + 1];
    for ((sec, a), b) in rho.sectors().iter().zip(rho.blocks()).zip(partner.blocks()) {
        let w = sec.weight() / z;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let k = j as i64 - i as i64;
                out[(k + n) as usize] += w * (a.get(i, j) * b.get(j, i)).re;
            }
        }
    }
    CoherenceSpectrum::new(n_spins, out)
}

/// Intensities sampled on a grid (`t̄` for experiment A, `τ̄` for B).
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeries {
    n_spins: u32,
    abscissa: Vec<f64>,
    values: Vec<f64>,
}

impl IntensitySeries {
    fn width(&self) -> usize {
        2 * self.n_spins as usize + 1
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// All orders at grid point `i`, from `k = -N` to `N`.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn spectrum(&self, i: usize) -> CoherenceSpectrum {
        CoherenceSpectrum::new(self.n_spins, self.row(i).to_vec()).expect("row width")
    }

    /// `J_k` along the grid.
    pub fn curve(&self, k: i64) -> Vec<f64> {
        let n = self.n_spins as i64;
        if k.abs() > n {
            return vec![0.0; self.len()];
        }
        let w = self.width();
        let col = (k + n) as usize;
        (0..self.len()).map(|i| self.values[i * w + col]).collect()
    }
}

/// `Σ_q G[k][q] cos((3D/2) k q t)`: experiment-A intensities grouped by
/// coherence order `k` and `q = M + M'`, since `E_M - E_M' = (3D/2) k q`.
///
/// `G` holds the block-weighted `|ρ_MM'(τ)|²`, either at one τ or averaged
/// over a window, so any dephasing time is cheap to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingTable {
    n_spins: u32,
    coupling: f64,
    weights: Vec<f64>,
}

impl DephasingTable {
    fn build(system: &SpinSystem, taus: &[f64], tau_weights: &[f64]) -> Result<Self> {
        let n = system.n_spins() as i64;
        let width = 2 * n as usize + 1;
        let sectors = enumerate_sectors(system);
        let z = scaled_iz_square_trace(&sectors);
        let mut weights = vec![0.0; width * width];
        for sec in &sectors {
            let kernel = SectorKernel::new(sec, system.coupling(), 0.0)?;
            let sums = weighted_squares(&kernel, taus, tau_weights);
            let w = sec.weight() / z;
            scatter_squares(&kernel, sec.total_spin().twice(), &sums, |k, q, v| {
                weights[(k + n) as usize * width + (q + n) as usize] += w * v;
            });
        }
        Ok(Self {
            n_spins: system.n_spins(),
            coupling: system.coupling(),
            weights,
        })
    }

    /// Table for the state `ρ(τ)` prepared by `H_MQ` for time `tau`.
    pub fn at_tau(system: &SpinSystem, tau: f64) -> Result<Self> {
        check_time("tau", tau)?;
        Self::build(system, &[tau], &[1.0])
    }

    /// Table averaged over the preparation window.
    pub fn averaged(system: &SpinSystem, window: &AveragingWindow) -> Result<Self> {
        let (taus, w) = window.nodes()?;
        Self::build(system, &taus, &w)
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    /// `J_k(t)`.
    pub fn intensity(&self, k: i64, t: f64) -> f64 {
        let n = self.n_spins as i64;
        if k.abs() > n {
            return 0.0;
        }
        let width = 2 * n as usize + 1;
        let row = &self.weights[(k + n) as usize * width..][..width];
        let omega = 1.5 * self.coupling * k as f64 * t;
        let mut acc = 0.0;
        for (qi, &g) in row.iter().enumerate() {
            if g != 0.0 {
                let q = qi as i64 - n;
                acc += if k == 0 || q == 0 {
                    g
                } else {
                    g * (omega * q as f64).cos()
                };
            }
        }
        acc
    }

    pub fn spectrum(&self, t: f64) -> CoherenceSpectrum {
        let n = self.n_spins as i64;
        let values = (-n..=n).map(|k| self.intensity(k, t)).collect();
        CoherenceSpectrum::new(self.n_spins, values).expect("row width")
    }

    pub fn series(&self, t_grid: &[f64]) -> IntensitySeries {
        let values = t_grid
            .iter()
            .flat_map(|&t| self.spectrum(t).intensities)
            .collect();
        IntensitySeries {
            n_spins: self.n_spins,
            abscissa: t_grid.to_vec(),
            values,
        }
    }
}

fn check_time(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "finite and >= 0",
        })
    }
}

/// `J_k(τ, t)` of the standard experiment: preparation by `H_MQ` for `tau`,
/// dephasing by `H_dz` for `t`.
pub fn intensities_experiment_a(
    system: &SpinSystem,
    tau: f64,
    t: f64,
) -> Result<CoherenceSpectrum> {
    check_time("t", t)?;
    Ok(DephasingTable::at_tau(system, tau)?.spectrum(t))
}

/// Partner state in the perturbed experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Mixing {
    /// `ρ(τ)` evolved by the ideal `H_MQ`.
    #[default]
    IdealMq,
    /// `ρ̃(τ, p)` itself.
    MatchedHeff,
}

impl Mixing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mixing::IdealMq => "ideal_mq",
            Mixing::MatchedHeff => "matched_heff",
        }
    }
}

impl fmt::Display for Mixing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mixing {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "ideal_mq" => Ok(Mixing::IdealMq),
            "matched_heff" => Ok(Mixing::MatchedHeff),
            other => Err(alloc::format!(
                "unknown mixing `{other}` (expected ideal_mq or matched_heff)"
            )),
        }
    }
}

/// `J_k(τ, p) = Tr{ρ̃_k(τ, p) partner_{-k}} / Tr{I_z²}` for every τ of the
/// grid. Sectors are factorized one at a time and added in descending `S`.
pub fn experiment_b_sweep(
    system: &SpinSystem,
    p: f64,
    taus: &[f64],
    mixing: Mixing,
) -> Result<IntensitySeries> {
    check_perturbation(p)?;
    for &tau in taus {
        check_time("tau", tau)?;
    }
    let n = system.n_spins() as usize;
    let sectors = enumerate_sectors(system);
    let z = scaled_iz_square_trace(&sectors);
    let mut values = vec![0.0; taus.len() * (2 * n + 1)];
    for sec in &sectors {
        let s2 = sec.total_spin().twice();
        let perturbed = SectorKernel::new(sec, system.coupling(), p)?;
        let ideal;
        let partner = match mixing {
            Mixing::MatchedHeff => Partner::Matched,
            Mixing::IdealMq if p == 0.0 => Partner::Ideal(&perturbed),
            Mixing::IdealMq => {
                ideal = SectorKernel::new(sec, system.coupling(), 0.0)?;
                Partner::Ideal(&ideal)
            }
        };
        let rows = overlap_sweep(&perturbed, partner, s2, n, taus);
        let w = sec.weight() / z;
        for (v, r) in values.iter_mut().zip(&rows) {
            *v += w * r;
        }
    }
    Ok(IntensitySeries {
        n_spins: system.n_spins(),
        abscissa: taus.to_vec(),
        values,
    })
}

/// `J_k(τ, p)` at one preparation time.
pub fn intensities_experiment_b(
    system: &SpinSystem,
    p: f64,
    tau: f64,
    mixing: Mixing,
) -> Result<CoherenceSpectrum> {
    Ok(experiment_b_sweep(system, p, &[tau], mixing)?.spectrum(0))
}

/// Preparation-time window for the averaged intensities: `τ̄ ∈ [τ₀, τ₀ +
/// periods·T]` with `T = 2π/√3`, sampled at `steps + 1` uniform points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingWindow {
    pub tau0: f64,
    pub periods: f64,
    pub steps: usize,
}

impl Default for AveragingWindow {
    fn default() -> Self {
        Self {
            tau0: 31.0,
            periods: 2.0,
            steps: 2000,
        }
    }
}

impl AveragingWindow {
    /// `T = 2π/√3`, the period of the `S = 3/2` block at `D = 1`.
    pub fn period() -> f64 {
        2.0 * PI / 3f64.sqrt()
    }

    /// Window length `periods · T`.
    pub fn span(&self) -> f64 {
        self.periods * Self::period()
    }

    pub fn step(&self) -> f64 {
        self.span() / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        check_time("tau0", self.tau0)?;
        if !(self.periods > 0.0 && self.periods.is_finite()) {
            return Err(Error::OutOfRange {
                name: "periods",
                value: self.periods,
                expected: "> 0",
            });
        }
        if self.steps == 0 {
            return Err(Error::OutOfRange {
                name: "steps",
                value: 0.0,
                expected: ">= 1",
            });
        }
        let limit = Self::period() / 100.0;
        if self.step() > limit {
            return Err(Error::GridTooCoarse {
                step: self.step(),
                limit,
            });
        }
        Ok(())
    }

    /// Grid points and composite-trapezoid weights, normalized to sum to 1.
    pub fn nodes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        let h = self.step();
        let taus = (0..=self.steps).map(|i| self.tau0 + i as f64 * h).collect();
        let w = (0..=self.steps)
            .map(|i| {
                let end = i == 0 || i == self.steps;
                (if end { 0.5 } else { 1.0 }) / self.steps as f64
            })
            .collect();
        Ok((taus, w))
    }
}

/// Averaged intensities `J̄_k(t̄)` on a `t̄` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSpectrum {
    pub window: AveragingWindow,
    pub series: IntensitySeries,
}

/// `J̄_k(t̄) = (1/2T) ∫ J_k(τ̄, t̄) dτ̄` over the window, for every `t̄`.
pub fn averaged_intensities(
    system: &SpinSystem,
    window: &AveragingWindow,
    t_grid: &[f64],
) -> Result<AveragedSpectrum> {
    for &t in t_grid {
        check_time("t", t)?;
    }
    let table = DephasingTable::averaged(system, window)?;
    Ok(AveragedSpectrum {
        window: *window,
        series: table.series(t_grid),
    })
}

/// Forward discrete Fourier transform, `F_m = Σ_j x_j e^{-2πi jm/n}`.
pub trait Dft {
    fn forward(&self, input: &[Complex64]) -> Vec<Complex64>;
}

/// Textbook `O(n²)` transform.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectDft;

impl Dft for DirectDft {
    fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|m| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let angle = -2.0 * PI * ((j * m) % n) as f64 / n as f64;
                        x * Complex64::from_polar(1.0, angle)
                    })
                    .sum()
            })
            .collect()
    }
}

/// Frequency-domain areas `A_k(τ)` of the evolution-period signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierAreas {
    pub n_spins: u32,
    /// `J_k(τ, 0) / 2` per order, `k = -N..=N`.
    pub analytic: Vec<f64>,
    /// Areas from the sampled signal, per order.
    pub numeric: Vec<f64>,
}

impl FourierAreas {
    pub fn analytic_sum(&self) -> f64 {
        self.analytic.iter().sum()
    }

    pub fn numeric_sum(&self) -> f64 {
        self.numeric.iter().sum()
    }

    /// Largest `|numeric - analytic|` relative to the largest analytic area.
    pub fn max_relative_deviation(&self) -> f64 {
        let scale = self.analytic.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        self.analytic
            .iter()
            .zip(&self.numeric)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Areas under `𝒥_k(τ, ω) = (1/2π) ∫_0^T J_k(τ, t) e^{-iωt} dt`, both as
/// `J_k(τ, 0)/2` and from a DFT of `n_samples` points on `[0, t_ev]`.
///
/// The numeric route applies trapezoid weights in time, transforms, and
/// sums `𝒥_k(ω_m) Δω` over the whole band `ω_m = 2πm/(n h)`. The band sum
/// picks out the `t = 0` sample with its half weight.
pub fn fourier_area_check(
    system: &SpinSystem,
    tau: f64,
    t_ev: f64,
    n_samples: usize,
    dft: &dyn Dft,
) -> Result<FourierAreas> {
    if !(t_ev > 0.0 && t_ev.is_finite()) {
        return Err(Error::OutOfRange {
            name: "t_ev",
            value: t_ev,
            expected: "> 0",
        });
    }
    if n_samples < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: n_samples,
        });
    }
    let table = DephasingTable::at_tau(system, tau)?;
    let analytic = table
        .spectrum(0.0)
        .as_slice()
        .iter()
        .map(|j| j / 2.0)
        .collect();

    let h = t_ev / (n_samples - 1) as f64;
    let grid: Vec<f64> = (0..n_samples).map(|i| i as f64 * h).collect();
    let series = table.series(&grid);
    let d_omega = 2.0 * PI / (n_samples as f64 * h);
    let n = system.n_spins() as i64;
    let numeric = (-n..=n)
        .map(|k| {
            let samples: Vec<Complex64> = series
                .curve(k)
                .iter()
                .enumerate()
                .map(|(i, &j)| {
                    let w = if i == 0 || i == n_samples - 1 {
                        0.5
                    } else {
                        1.0
                    };
                    Complex64::new(w * j, 0.0)
                })
                .collect();
            let spectrum = dft.forward(&samples);
            spectrum
                .iter()
                .map(|f| (h * f.re / (2.0 * PI)) * d_omega)
                .sum()
        })
        .collect();
    Ok(FourierAreas {
        n_spins: system.n_spins(),
        analytic,
        numeric,
    })
}

impl fmt::Display for CoherenceSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, j) in self.iter() {
            writeln!(f, "{k}\t{j:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{diagonalize, evolve, PairEvolution};
    use crate::spin::{build_hmq, initial_density};

    fn mq_state(system: &SpinSystem, tau: f64) -> BlockOperator {
        let eig = diagonalize(&build_hmq(system)).unwrap();
        evolve(&initial_density(system), &eig, tau).unwrap()
    }

    #[test]
    fn components_partition_the_state() {
        let system = SpinSystem::dimensionless(7).unwrap();
        let rho = mq_state(&system, 0.9);
        let n = 7;
        let mut sum: Vec<CMatrix> = rho
            .blocks()
            .iter()
            .map(|b| CMatrix::zeros(b.rows(), b.cols()))
            .collect();
        for k in -n..=n {
            let part = coherence_component(&rho, k);
            for (s, b) in sum.iter_mut().zip(part.blocks()) {
                *s = CMatrix::from_fn(s.rows(), s.cols(), |i, j| s.get(i, j) + b.get(i, j));
            }
            if k % 2 != 0 {
                assert!(part.blocks().iter().all(|b| b.frobenius_norm() < 1e-14));
            }
        }
        for (s, b) in sum.iter().zip(rho.blocks()) {
            assert_eq!(s, b);
        }
        let diag = initial_density(&system);
        assert_eq!(coherence_component(&diag, 0), diag);
    }

    #[test]
    fn components_carry_their_order_under_z_rotation() {
        let system = SpinSystem::dimensionless(6).unwrap();
        let rho = mq_state(&system, 1.3);
        let phi = 0.7;
        for k in [-4i64, -2, 0, 2, 6] {
            let part = coherence_component(&rho, k);
            for (sec, b) in part.sectors().iter().zip(part.blocks()) {
                let n = b.rows();
                let m: Vec<f64> = (0..n).map(|i| sec.twice_m(i) as f64 / 2.0).collect();
                let rotated = CMatrix::from_fn(n, n, |i, j| {
                    b.get(i, j) * Complex64::from_polar(1.0, -phi * (m[i] - m[j]))
                });
                let scaled = CMatrix::from_fn(n, n, |i, j| {
                    b.get(i, j) * Complex64::from_polar(1.0, -(k as f64) * phi)
                });
                assert!(rotated.max_abs_diff(&scaled) < 1e-12);
            }
        }
    }

    #[test]
    fn fast_experiment_a_matches_dense_pipeline() {
        for n in [3u32, 6, 10] {
            let system = SpinSystem::dimensionless(n).unwrap();
            for (tau, t) in [(0.8, 0.3), (2.5, 1.7), (0.0, 0.4)] {
                let rho = mq_state(&system, tau);
                let dense = intensities(&dephase(&rho, &system, t).unwrap(), &rho).unwrap();
                let fast = intensities_experiment_a(&system, tau, t).unwrap();
                for (a, b) in dense.as_slice().iter().zip(fast.as_slice()) {
                    assert!((a - b).abs() < 1e-12, "N={n} tau={tau} t={t}");
                }
            }
        }
    }

    #[test]
    fn fast_experiment_b_matches_dense_pipeline() {
        for n in [4u32, 9] {
            let system = SpinSystem::dimensionless(n).unwrap();
            for p in [0.0, 0.01, 0.3] {
                let pair = PairEvolution::new(&system, p).unwrap();
                for tau in [0.4, 3.3] {
                    let tilde = pair.evolve(tau).unwrap();
                    let rho = mq_state(&system, tau);
                    let ideal = intensities(&tilde, &rho).unwrap();
                    let matched = intensities(&tilde, &tilde).unwrap();
                    let fast_i =
                        intensities_experiment_b(&system, p, tau, Mixing::IdealMq).unwrap();
                    let fast_m =
                        intensities_experiment_b(&system, p, tau, Mixing::MatchedHeff).unwrap();
                    for (a, b) in ideal.as_slice().iter().zip(fast_i.as_slice()) {
                        assert!((a - b).abs() < 1e-12);
                    }
                    for (a, b) in matched.as_slice().iter().zip(fast_m.as_slice()) {
                        assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn initial_state_is_pure_zero_quantum() {
        let system = SpinSystem::dimensionless(12).unwrap();
        let s = intensities_experiment_a(&system, 0.0, 0.0).unwrap();
        assert!((s.intensity(0) - 1.0).abs() < 1e-14);
        assert!(s
            .iter()
            .filter(|(k, _)| *k != 0)
            .all(|(_, j)| j.abs() < 1e-15));
    }

    #[test]
    fn matched_mixing_is_a_perfect_echo() {
        let system = SpinSystem::dimensionless(11).unwrap();
        for (p, tau) in [(0.02, 1.0), (0.5, 4.0)] {
            let s = intensities_experiment_b(&system, p, tau, Mixing::MatchedHeff).unwrap();
            assert!((s.total() - 1.0).abs() < 1e-12);
            assert!(s.as_slice().iter().all(|&j| j >= 0.0));
        }
    }

    #[test]
    fn window_nodes_and_rejection() {
        let w = AveragingWindow::default();
        let (taus, weights) = w.nodes().unwrap();
        assert_eq!(taus.len(), 2001);
        assert_eq!(taus[0], 31.0);
        assert!((taus[2000] - (31.0 + 4.0 * PI / 3f64.sqrt())).abs() < 1e-12);
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let coarse = AveragingWindow { steps: 150, ..w };
        assert!(matches!(
            coarse.validate(),
            Err(Error::GridTooCoarse { .. })
        ));
        let fine_enough = AveragingWindow { steps: 200, ..w };
        assert!(fine_enough.validate().is_ok());
    }

    #[test]
    fn window_period_is_set_by_the_spin_three_halves_block() {
        // S = 3/2 block of H_MQ at D = 1 has eigenvalues ±√3/2 (twice), so
        // its only Bohr frequency is √3 and T = 2π/√3 is its period. The
        // smallest nonzero |eigenvalue| over all sectors is 1/2 (S = 1).
        let eig = diagonalize(&build_hmq(&SpinSystem::dimensionless(3).unwrap())).unwrap();
        let top = eig.eigenvalues(0);
        let r = 3f64.sqrt() / 2.0;
        for (got, want) in top.iter().zip([-r, -r, r, r]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(((top[3] - top[0]) - 2.0 * PI / AveragingWindow::period()).abs() < 1e-14);
        let eig = diagonalize(&build_hmq(&SpinSystem::dimensionless(2).unwrap())).unwrap();
        let smallest = eig
            .eigenvalues(0)
            .iter()
            .filter(|v| v.abs() > 1e-12)
            .fold(f64::MAX, |m, v| m.min(v.abs()));
        assert!((smallest - 0.5).abs() < 1e-14);
    }

    #[test]
    fn direct_dft_of_impulse_and_constant() {
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        x[0] = Complex64::new(1.0, 0.0);
        for f in DirectDft.forward(&x) {
            assert!((f - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let ones = vec![Complex64::new(1.0, 0.0); 8];
        let f = DirectDft.forward(&ones);
        assert!((f[0].re - 8.0).abs() < 1e-12);
        assert!(f[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn mixing_parses_its_labels() {
        for label in ["ideal_mq", "matched_heff"] {
            assert_eq!(label.parse::<Mixing>().unwrap().to_string(), label);
        }
        assert!("ideal".parse::<Mixing>().is_err());
    }
}
