//! Second-order response of the total intensity to the perturbation `p`.
//!
//! `Σ_k J_k(τ, p) = Tr{ρ̃(τ, p) ρ(τ)} / Tr{I_z²}` drops below its `p = 0`
//! value by `p² A(τ) + O(p³)`.

use alloc::vec::Vec;

use crate::coherence::{experiment_b_sweep, Mixing};
use crate::linalg::{cgemm, CMatrix, Op};
use crate::propagator::{diagonalize, evolve};
use crate::spin::{
    build_hdz, build_hmq, enumerate_sectors, initial_density, scaled_iz_square_trace,
    BlockOperator, SpinSystem,
};
use crate::{Error, Result};

fn totals(system: &SpinSystem, taus: &[f64], p: f64) -> Result<Vec<f64>> {
    let series = experiment_b_sweep(system, p, taus, Mixing::IdealMq)?;
    Ok((0..series.len())
        .map(|i| series.row(i).iter().sum())
        .collect())
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "0 < p <= 1",
        })
    }
}

/// `(Σ_k J_k(τ, 0) - Σ_k J_k(τ, p)) / p²` with the ideal partner, for every
/// τ of the grid.
pub fn deficit_series(system: &SpinSystem, taus: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    let reference = totals(system, taus, 0.0)?;
    let perturbed = totals(system, taus, p)?;
    Ok(reference
        .iter()
        .zip(&perturbed)
        .map(|(a, b)| (a - b) / (p * p))
        .collect())
}

/// [`deficit_series`] at a single τ.
pub fn sum_deficit(system: &SpinSystem, tau: f64, p: f64) -> Result<f64> {
    Ok(deficit_series(system, &[tau], p)?[0])
}

/// Estimates of `A(τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrder {
    pub tau: f64,
    /// Deficit quotient at `p = 1e-3`.
    pub coarse: f64,
    /// Deficit quotient at `p = 5e-4`.
    pub fine: f64,
    /// `2·fine - coarse`, cancelling the `O(p)` term of the quotient.
    pub extrapolated: f64,
    /// `-(τ²/2) Tr{[ρ(τ/2), H_dz - H_MQ]²} / Tr{I_z²}`, the midpoint
    /// form, which carries no `O(τ³)` error.
    pub closed_form: f64,
    /// The same with `ρ(0) = I_z`.
    pub closed_form_initial: f64,
    /// The same with `ρ(τ)`.
    pub closed_form_final: f64,
}

const P_COARSE: f64 = 1e-3;
const P_FINE: f64 = 5e-4;

/// `A(τ)` from the deficit quotient at two values of `p`, together with the
/// small-τ commutator expressions, for every τ of the grid.
pub fn second_order_series(system: &SpinSystem, taus: &[f64]) -> Result<Vec<SecondOrder>> {
    for &tau in taus {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::OutOfRange {
                name: "tau",
                value: tau,
                expected: "finite tau >= 0",
            });
        }
    }
    let reference = totals(system, taus, 0.0)?;
    let coarse = totals(system, taus, P_COARSE)?;
    let fine = totals(system, taus, P_FINE)?;

    let hmq = build_hmq(system);
    let v = build_hdz(system).combine(1.0, &hmq, -1.0)?;
    let eig = diagonalize(&hmq)?;
    let iz = initial_density(system);
    let z = scaled_iz_square_trace(&enumerate_sectors(system));
    let closed = |s: f64, tau: f64| -> Result<f64> {
        let rho = evolve(&iz, &eig, s)?;
        Ok(-0.5 * tau * tau * commutator_square(&rho, &v) / z)
    };

    let mut out = Vec::with_capacity(taus.len());
    for (i, &tau) in taus.iter().enumerate() {
        let c = (reference[i] - coarse[i]) / (P_COARSE * P_COARSE);
        let f = (reference[i] - fine[i]) / (P_FINE * P_FINE);
        out.push(SecondOrder {
            tau,
            coarse: c,
            fine: f,
            extrapolated: 2.0 * f - c,
            closed_form: closed(0.5 * tau, tau)?,
            closed_form_initial: closed(0.0, tau)?,
            closed_form_final: closed(tau, tau)?,
        });
    }
    Ok(out)
}

/// [`second_order_series`] at a single τ.
pub fn perturbation_second_order(system: &SpinSystem, tau: f64) -> Result<SecondOrder> {
    Ok(second_order_series(system, &[tau])?.remove(0))
}

/// Block-weighted `Tr{[ρ, V]²}`, which is `≤ 0`.
fn commutator_square(rho: &BlockOperator, v: &BlockOperator) -> f64 {
    let mut total = 0.0;
    for (sec, (a, b)) in rho
        .sectors()
        .iter()
        .zip(rho.blocks().iter().zip(v.blocks()))
    {
        let ab = cgemm(a, Op::N, b, Op::N);
        let ba = cgemm(b, Op::N, a, Op::N);
        let n = ab.rows();
        let c = CMatrix::from_fn(n, n, |i, j| ab.get(i, j) - ba.get(i, j));
        total += sec.weight() * cgemm(&c, Op::N, &c, Op::N).trace().re;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tau_matches_commutator_form() {
        let system = SpinSystem::dimensionless(21).unwrap();
        let a = perturbation_second_order(&system, 0.05).unwrap();
        assert!(a.closed_form > 0.0);
        let rel = (a.extrapolated - a.closed_form).abs() / a.closed_form;
        assert!(rel < 0.02, "{a:?}");
        // the end-point forms share the τ → 0 limit but not the τ³ term
        let tiny = perturbation_second_order(&system, 0.002).unwrap();
        for v in [tiny.closed_form_initial, tiny.closed_form_final] {
            assert!(
                (v - tiny.extrapolated).abs() / tiny.extrapolated < 0.01,
                "{tiny:?}"
            );
        }
    }

    #[test]
    fn deficit_is_positive_and_quadratic() {
        let system = SpinSystem::dimensionless(21).unwrap();
        for tau in [0.1, 0.25, 0.5] {
            let a = perturbation_second_order(&system, tau).unwrap();
            assert!(a.extrapolated > 0.0, "{a:?}");
            if tau == 0.1 {
                assert!((a.coarse - a.fine).abs() / a.fine < 0.01, "{a:?}");
            }
        }
        assert!(sum_deficit(&system, 0.1, 0.0).is_err());
    }
}
