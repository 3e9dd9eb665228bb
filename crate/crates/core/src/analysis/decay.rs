//! e-fold decay times (experiment A) and zero-crossing decay times between
//! envelope zeros (experiment B).

use alloc::vec::Vec;

use super::envelope::envelopes;
use super::{crossing, DecayCurve};
use crate::{Error, Result};

/// Outcome of [`decay_time_e`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayTime {
    Reached(f64),
    /// The curve never fell to `J(0)/e` on the grid.
    NotReached,
}

impl DecayTime {
    pub fn value(&self) -> Option<f64> {
        match self {
            DecayTime::Reached(t) => Some(*t),
            DecayTime::NotReached => None,
        }
    }
}

/// Smallest abscissa where `J(0)/J ≥ e`, refined by linear interpolation
/// between the bracketing samples.
pub fn decay_time_e(curve: &DecayCurve) -> Result<DecayTime> {
    let x = curve.abscissa();
    let y = curve.values();
    let start = y[0];
    if !(start > 0.0) {
        return Err(Error::InvalidCurve(
            "initial intensity must be positive".into(),
        ));
    }
    let target = start / core::f64::consts::E;
    for i in 1..y.len() {
        if y[i] <= target {
            return Ok(DecayTime::Reached(crossing(
                x[i - 1],
                y[i - 1],
                x[i],
                y[i],
                target,
            )));
        }
    }
    Ok(DecayTime::NotReached)
}

/// Outcome of [`decay_time_perturbed`].
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbedDecay {
    Reached {
        /// Mean of the raw zeros inside the window.
        tau_p: f64,
        /// First zeros of the lower and upper envelopes, ordered.
        window: (f64, f64),
        zeros: Vec<f64>,
    },
    /// An envelope has no zero after the maximum within the grid.
    NotReached,
    /// No zero of the raw curve falls between the envelope zeros.
    NoCrossings { window: (f64, f64) },
}

impl PerturbedDecay {
    pub fn value(&self) -> Option<f64> {
        match self {
            PerturbedDecay::Reached { tau_p, .. } => Some(*tau_p),
            _ => None,
        }
    }
}

/// Zeros of the sampled curve: exact zero samples and sign changes, the
/// latter located by linear interpolation.
pub(crate) fn raw_zeros(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..y.len() {
        if y[i] == 0.0 {
            if i == 0 || y[i - 1] != 0.0 {
                out.push(x[i]);
            }
        } else if i > 0 && y[i - 1] != 0.0 && (y[i - 1] < 0.0) != (y[i] < 0.0) {
            out.push(crossing(x[i - 1], y[i - 1], x[i], y[i], 0.0));
        }
    }
    out
}

/// `τ_p(k)`: the mean of the raw zeros between the first zeros of the lower
/// and upper envelopes that follow the maximum of the upper envelope.
///
/// The window is closed, so a raw zero that coincides with an envelope zero
/// is counted.
pub fn decay_time_perturbed(curve: &DecayCurve) -> Result<PerturbedDecay> {
    let env = envelopes(curve)?;
    let peak = env.upper.argmax();
    let (Some(a), Some(b)) = (
        env.lower.first_zero_after(peak),
        env.upper.first_zero_after(peak),
    ) else {
        return Ok(PerturbedDecay::NotReached);
    };
    let window = if a <= b { (a, b) } else { (b, a) };
    let zeros: Vec<f64> = raw_zeros(curve.abscissa(), curve.values())
        .into_iter()
        .filter(|&z| z >= window.0 && z <= window.1)
        .collect();
    if zeros.is_empty() {
        return Ok(PerturbedDecay::NoCrossings { window });
    }
    let tau_p = zeros.iter().sum::<f64>() / zeros.len() as f64;
    Ok(PerturbedDecay::Reached {
        tau_p,
        window,
        zeros,
    })
}
