//! Spectral factorization of block operators and unitary evolution of block
//! density matrices.
//!
//! Evolution applies exact phases in the eigenbasis,
//! `ρ(τ) = V e^{-iΛτ} V† ρ V e^{iΛτ} V†`, so one factorization serves any
//! number of time points.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{cgemm, hermitian_eigen, CMatrix, Op};
use crate::par;
use crate::spin::{build_heff, initial_density, BlockOperator, SpinSector, SpinSystem};
use crate::{Error, Result};

/// Eigenvalues (ascending) and unitary eigenvector matrix of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorEigen {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl SectorEigen {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }
}

/// Per-sector spectral factorization of a [`BlockOperator`].
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    sectors: Arc<[SpinSector]>,
    blocks: Vec<SectorEigen>,
}

impl Eigensystem {
    pub fn sectors(&self) -> &[SpinSector] {
        &self.sectors
    }

    pub fn blocks(&self) -> &[SectorEigen] {
        &self.blocks
    }

    pub fn eigenvalues(&self, sector: usize) -> &[f64] {
        &self.blocks[sector].values
    }

    pub fn eigenvectors(&self, sector: usize) -> &CMatrix {
        &self.blocks[sector].vectors
    }
}

/// Factorizes every block; sectors are processed in parallel and returned
/// in the operator's (descending `S`) order.
pub fn diagonalize(op: &BlockOperator) -> Result<Eigensystem> {
    let blocks = par::map_indexed(op.blocks().len(), |i| {
        hermitian_eigen(op.block(i)).map(|(values, vectors)| SectorEigen { values, vectors })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Eigensystem {
        sectors: op.shared_sectors(),
        blocks,
    })
}

fn same_sectors(a: &[SpinSector], b: &[SpinSector]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.total_spin() == y.total_spin())
}

/// `e^{-iHτ} ρ e^{iHτ}` block by block, with `H` given by its eigensystem.
pub fn evolve(rho: &BlockOperator, eig: &Eigensystem, duration: f64) -> Result<BlockOperator> {
    if !same_sectors(rho.sectors(), &eig.sectors) {
        return Err(Error::SectorMismatch(
            "density matrix and eigensystem belong to different systems".into(),
        ));
    }
    let blocks = par::map_indexed(rho.blocks().len(), |i| {
        evolve_block(rho.block(i), &eig.blocks[i], duration)
    });
    BlockOperator::new(rho.shared_sectors(), blocks)
}

fn evolve_block(rho: &CMatrix, eig: &SectorEigen, duration: f64) -> CMatrix {
    let v = &eig.vectors;
    let in_basis = cgemm(&cgemm(v, Op::H, rho, Op::N), Op::N, v, Op::N);
    let n = eig.values.len();
    let phases: Vec<(f64, f64)> = eig
        .values
        .iter()
        .map(|&l| ((l * duration).cos(), -(l * duration).sin()))
        .collect();
    // element (a, b) picks up e^{-iλ_a τ} e^{+iλ_b τ}
    let phased = CMatrix::from_fn(n, n, |a, b| {
        let (ca, sa) = phases[a];
        let (cb, sb) = phases[b];
        let f = num_complex::Complex64::new(ca * cb + sa * sb, sa * cb - ca * sb);
        in_basis.get(a, b) * f
    });
    cgemm(&cgemm(v, Op::N, &phased, Op::N), Op::N, v, Op::H)
}

/// Evolution of `I_z` under `H_eff(p)` with a cached factorization, so a
/// whole τ grid costs one diagonalization.
#[derive(Debug, Clone)]
pub struct PairEvolution {
    p: f64,
    eigensystem: Eigensystem,
    initial: BlockOperator,
}

impl PairEvolution {
    pub fn new(system: &SpinSystem, p: f64) -> Result<Self> {
        let heff = build_heff(system, p)?;
        Ok(Self {
            p,
            eigensystem: diagonalize(&heff)?,
            initial: initial_density(system),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eigensystem
    }

    /// `ρ̃(τ, p) = e^{-iτH_eff} I_z e^{iτH_eff}`.
    pub fn evolve(&self, tau: f64) -> Result<BlockOperator> {
        if !(tau >= 0.0) {
            return Err(Error::OutOfRange {
                name: "tau",
                value: tau,
                expected: "tau >= 0",
            });
        }
        evolve(&self.initial, &self.eigensystem, tau)
    }
}

/// One-shot `ρ̃(τ, p)`; use [`PairEvolution`] for a grid of τ values.
pub fn evolve_hamiltonian_pair(system: &SpinSystem, p: f64, tau: f64) -> Result<BlockOperator> {
    PairEvolution::new(system, p)?.evolve(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_hdz, build_hmq};
    use num_complex::Complex64;

    fn random_hermitian_density(system: &SpinSystem, seed: u64) -> BlockOperator {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let iz = initial_density(system);
        let blocks = iz
            .blocks()
            .iter()
            .map(|b| {
                let n = b.rows();
                let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
                CMatrix::from_fn(n, n, |i, j| a.get(i, j) + a.get(j, i).conj())
            })
            .collect();
        BlockOperator::new(iz.shared_sectors(), blocks).unwrap()
    }

    fn purity(op: &BlockOperator) -> f64 {
        op.weighted_sum(|b| cgemm(b, Op::N, b, Op::N).trace()).re
    }

    #[test]
    fn small_blocks_have_expected_spectra() {
        let system = SpinSystem::dimensionless(2).unwrap();
        let eig = diagonalize(&build_hmq(&system)).unwrap();
        let vals = eig.eigenvalues(0);
        for (got, want) in vals.iter().zip([-0.5, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
        let eig = diagonalize(&build_hdz(&system)).unwrap();
        let vals = eig.eigenvalues(0);
        for (got, want) in vals.iter().zip([-1.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn eigensystems_reconstruct_and_are_unitary() {
        let system = SpinSystem::dimensionless(9).unwrap();
        for op in [
            build_hmq(&system),
            build_hdz(&system),
            build_heff(&system, 0.4).unwrap(),
        ] {
            let eig = diagonalize(&op).unwrap();
            for (i, block) in op.blocks().iter().enumerate() {
                let v = eig.eigenvectors(i);
                let n = v.rows();
                let lam = CMatrix::from_fn(n, n, |a, b| {
                    if a == b {
                        Complex64::new(eig.eigenvalues(i)[a], 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let rebuilt = cgemm(&cgemm(v, Op::N, &lam, Op::N), Op::N, v, Op::H);
                let scale = block.frobenius_norm().max(1.0);
                let diff = CMatrix::from_fn(n, n, |a, b| rebuilt.get(a, b) - block.get(a, b));
                assert!(diff.frobenius_norm() / scale < 1e-10);
                let vv = cgemm(v, Op::H, v, Op::N);
                assert!(vv.max_abs_diff(&CMatrix::identity(n)) < 1e-10);
                let vals = eig.eigenvalues(i);
                assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn evolution_preserves_trace_purity_and_spectrum() {
        let system = SpinSystem::dimensionless(7).unwrap();
        let eig = diagonalize(&build_heff(&system, 0.25).unwrap()).unwrap();
        let rho = random_hermitian_density(&system, 17);
        for t in [0.0, 0.3, 4.1] {
            let out = evolve(&rho, &eig, t).unwrap();
            assert!(out.hermiticity_error() < 1e-12);
            let tr0 = rho.weighted_sum(CMatrix::trace);
            let tr1 = out.weighted_sum(CMatrix::trace);
            assert!((tr0 - tr1).norm() < 1e-10);
            assert!((purity(&rho) - purity(&out)).abs() < 1e-10);
            for (a, b) in rho.blocks().iter().zip(out.blocks()) {
                let (va, _) = hermitian_eigen(a).unwrap();
                let (vb, _) = hermitian_eigen(b).unwrap();
                for (x, y) in va.iter().zip(&vb) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
        let same = evolve(&rho, &eig, 0.0).unwrap();
        for (a, b) in rho.blocks().iter().zip(same.blocks()) {
            assert!(a.max_abs_diff(b) < 1e-13);
        }
    }

    #[test]
    fn commuting_state_is_stationary() {
        let system = SpinSystem::dimensionless(6).unwrap();
        let iz = initial_density(&system);
        let eig = diagonalize(&build_hdz(&system)).unwrap();
        for t in [0.5, 7.0] {
            let out = evolve(&iz, &eig, t).unwrap();
            for (a, b) in iz.blocks().iter().zip(out.blocks()) {
                assert!(a.max_abs_diff(b) < 1e-12);
            }
        }
        let pair = PairEvolution::new(&system, 1.0).unwrap();
        let out = pair.evolve(3.0).unwrap();
        for (a, b) in iz.blocks().iter().zip(out.blocks()) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn pair_evolution_composes_and_reduces_to_mq() {
        let system = SpinSystem::dimensionless(8).unwrap();
        let pair = PairEvolution::new(&system, 0.2).unwrap();
        let (t1, t2) = (0.7, 1.9);
        let direct = pair.evolve(t1 + t2).unwrap();
        let stepped = evolve(&pair.evolve(t1).unwrap(), pair.eigensystem(), t2).unwrap();
        for (a, b) in direct.blocks().iter().zip(stepped.blocks()) {
            assert!(a.max_abs_diff(b) < 1e-10);
        }

        let mq = diagonalize(&build_hmq(&system)).unwrap();
        let via_mq = evolve(&initial_density(&system), &mq, 1.1).unwrap();
        let via_pair = evolve_hamiltonian_pair(&system, 0.0, 1.1).unwrap();
        for (a, b) in via_mq.blocks().iter().zip(via_pair.blocks()) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        assert!(pair.evolve(-1.0).is_err());
    }

    #[test]
    fn mismatched_structures_are_rejected() {
        let a = initial_density(&SpinSystem::dimensionless(4).unwrap());
        let eig = diagonalize(&build_hmq(&SpinSystem::dimensionless(5).unwrap())).unwrap();
        assert!(matches!(
            evolve(&a, &eig, 1.0),
            Err(Error::SectorMismatch(_))
        ));
    }
}
