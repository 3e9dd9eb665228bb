//! Brute-force reference in the full `2^N` product basis.
//!
//! Collective operators are assembled from single-spin Pauli matrices by
//! Kronecker products and evolved through dense Hermitian eigensystems.
//! Nothing here touches the block machinery of `equispin-core`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use equispin_core::coherence::Mixing;

/// Largest system the oracle accepts.
pub const MAX_SPINS: u32 = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("the product-basis oracle handles 1..={MAX_SPINS} spins, got {0}")]
    TooManySpins(u32),
    #[error("p = {0} outside [0, 1]")]
    BadPerturbation(f64),
}

/// Operators available in the product basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Which {
    Hmq,
    Hdz,
    Heff(f64),
    Iz,
}

/// A dense `2^N × 2^N` operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperator {
    pub n_spins: u32,
    pub matrix: DMatrix<Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn single(which: char) -> DMatrix<Complex64> {
    let z = c(0.0);
    match which {
        'x' => DMatrix::from_row_slice(2, 2, &[z, c(0.5), c(0.5), z]),
        'y' => DMatrix::from_row_slice(
            2,
            2,
            &[z, Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5), z],
        ),
        'z' => DMatrix::from_row_slice(2, 2, &[c(0.5), z, z, c(-0.5)]),
        _ => unreachable!(),
    }
}

/// `Σ_j 1 ⊗ … ⊗ σ_j ⊗ … ⊗ 1` for one Cartesian component.
fn collective(n: u32, which: char) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let id = DMatrix::<Complex64>::identity(2, 2);
    let s = single(which);
    let mut total = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..n {
        let mut term = DMatrix::<Complex64>::identity(1, 1);
        for site in 0..n {
            term = term.kronecker(if site == j { &s } else { &id });
        }
        total += term;
    }
    total
}

fn check(n: u32) -> Result<(), OracleError> {
    if n == 0 || n > MAX_SPINS {
        Err(OracleError::TooManySpins(n))
    } else {
        Ok(())
    }
}

/// Builds one operator for `n` spins with dipolar constant `d`.
pub fn build_full(n: u32, d: f64, which: Which) -> Result<ProductOperator, OracleError> {
    check(n)?;
    let (ix, iy, iz) = (collective(n, 'x'), collective(n, 'y'), collective(n, 'z'));
    let i = Complex64::new(0.0, 1.0);
    let plus = &ix + &iy * i;
    let minus = &ix - &iy * i;
    let hmq = || (&plus * &plus + &minus * &minus) * c(-d / 4.0);
    let hdz = || {
        let i2 = &ix * &ix + &iy * &iy + &iz * &iz;
        (&iz * &iz * c(3.0) - i2) * c(d / 2.0)
    };
    let matrix = match which {
        Which::Hmq => hmq(),
        Which::Hdz => hdz(),
        Which::Heff(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(OracleError::BadPerturbation(p));
            }
            hmq() * c(1.0 - p) + hdz() * c(p)
        }
        Which::Iz => iz,
    };
    Ok(ProductOperator { n_spins: n, matrix })
}

impl ProductOperator {
    /// Largest `|A - A†|` element.
    pub fn hermiticity_error(&self) -> f64 {
        let a = &self.matrix;
        let mut worst = 0.0f64;
        for r in 0..a.nrows() {
            for col in 0..a.ncols() {
                worst = worst.max((a[(r, col)] - a[(col, r)].conj()).norm());
            }
        }
        worst
    }

    /// Ascending eigenvalues.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `e^{-iAt}` through the eigensystem of this (Hermitian) operator.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let eig = self.matrix.clone().symmetric_eigen();
        let v = &eig.eigenvectors;
        let phases =
            DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
        v * phases * v.adjoint()
    }
}

/// `2 m_z` of each product state: bit set means spin down.
fn twice_mz(n: u32) -> Vec<i64> {
    (0..1usize << n)
        .map(|b| n as i64 - 2 * b.count_ones() as i64)
        .collect()
}

/// `J_k = Tr{ρ_k partner_{-k}} / Tr{I_z²}` with orders read off the `I_z`
/// eigenvalues of row and column.
fn bin(n: u32, rho: &DMatrix<Complex64>, partner: &DMatrix<Complex64>) -> Vec<f64> {
    let m = twice_mz(n);
    let z = n as f64 * (1u64 << n) as f64 / 4.0;
    let mut out = vec![0.0; 2 * n as usize + 1];
    for a in 0..rho.nrows() {
        for b in 0..rho.ncols() {
            let k = (m[a] - m[b]) / 2;
            out[(k + n as i64) as usize] += (rho[(a, b)] * partner[(b, a)]).re;
        }
    }
    out.iter().map(|v| v / z).collect()
}

fn evolve(u: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    u * rho * u.adjoint()
}

/// Experiment A: preparation for `tau` under `H_MQ`, evolution for `t`
/// under `H_dz`, ideal mixing. Orders run `-N..=N`.
pub fn oracle_intensities_a(n: u32, d: f64, tau: f64, t: f64) -> Result<Vec<f64>, OracleError> {
    let iz = build_full(n, d, Which::Iz)?.matrix;
    let rho = evolve(&build_full(n, d, Which::Hmq)?.propagator(tau), &iz);
    let evolved = evolve(&build_full(n, d, Which::Hdz)?.propagator(t), &rho);
    Ok(bin(n, &evolved, &rho))
}

/// Experiment B: preparation for `tau` under `H_eff(p)` read out against
/// the chosen partner.
pub fn oracle_intensities_b(
    n: u32,
    d: f64,
    p: f64,
    tau: f64,
    mixing: Mixing,
) -> Result<Vec<f64>, OracleError> {
    let iz = build_full(n, d, Which::Iz)?.matrix;
    let perturbed = evolve(&build_full(n, d, Which::Heff(p))?.propagator(tau), &iz);
    let partner = match mixing {
        Mixing::IdealMq => evolve(&build_full(n, d, Which::Hmq)?.propagator(tau), &iz),
        Mixing::MatchedHeff => perturbed.clone(),
    };
    Ok(bin(n, &perturbed, &partner))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spin_has_no_double_quantum_term() {
        let h = build_full(1, 1.0, Which::Hmq).unwrap();
        assert!(h.matrix.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn two_spin_secular_dipolar_matrix() {
        // D(2 I_z¹I_z² - (I_x¹I_x² + I_y¹I_y²)) in |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩
        let h = build_full(2, 1.0, Which::Hdz).unwrap().matrix;
        let want = [
            [0.5, 0.0, 0.0, 0.0],
            [0.0, -0.5, -0.5, 0.0],
            [0.0, -0.5, -0.5, 0.0],
            [0.0, 0.0, 0.0, 0.5],
        ];
        for r in 0..4 {
            for col in 0..4 {
                assert!((h[(r, col)] - c(want[r][col])).norm() < 1e-14, "{h}");
            }
        }
    }

    #[test]
    fn operators_are_hermitian() {
        for which in [Which::Hmq, Which::Hdz, Which::Heff(0.3), Which::Iz] {
            assert!(build_full(4, 1.3, which).unwrap().hermiticity_error() < 1e-12);
        }
        assert!(build_full(13, 1.0, Which::Iz).is_err());
        assert!(build_full(2, 1.0, Which::Heff(1.5)).is_err());
    }

    #[test]
    fn sum_rule() {
        let j = oracle_intensities_a(4, 1.0, 0.7, 0.0).unwrap();
        assert!((j.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
