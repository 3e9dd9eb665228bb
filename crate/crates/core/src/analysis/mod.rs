//! Decay times, envelopes, least-squares model fits, coherence-cluster sizes
//! and the second-order perturbation coefficient.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

mod cluster;
mod decay;
mod envelope;
mod fit;
mod perturbation;

pub use cluster::{
    cluster_size, cluster_trace_averaged, cluster_trace_envelope, ClusterCount, ClusterTrace,
};
pub use decay::{decay_time_e, decay_time_perturbed, DecayTime, PerturbedDecay};
pub use envelope::{envelopes, upper_envelope, Envelope, Envelopes};
pub use fit::{fit_coth, fit_tanh, levenberg_marquardt, FitResult, LmOptions, LmOutcome, Model};
pub use perturbation::{
    deficit_series, perturbation_second_order, second_order_series, sum_deficit, SecondOrder,
};

/// Where a curve came from; carried through to reports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveMeta {
    pub n_spins: u32,
    pub p: f64,
    pub experiment: String,
}

/// Samples of one coherence order's intensity on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    abscissa: Vec<f64>,
    values: Vec<f64>,
    order: i64,
    meta: CurveMeta,
}

impl DecayCurve {
    pub fn new(abscissa: Vec<f64>, values: Vec<f64>, order: i64) -> Result<Self> {
        if abscissa.len() != values.len() {
            return Err(Error::InvalidCurve(alloc::format!(
                "{} abscissae but {} values",
                abscissa.len(),
                values.len()
            )));
        }
        if abscissa.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: abscissa.len(),
            });
        }
        if abscissa.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCurve(
                "abscissa must be strictly increasing".into(),
            ));
        }
        if values.iter().chain(&abscissa).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite sample".into()));
        }
        Ok(Self {
            abscissa,
            values,
            order,
            meta: CurveMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: CurveMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Linear interpolation for the crossing of `level` between two samples.
pub(crate) fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        x1
    } else {
        x0 + (level - y0) / (y1 - y0) * (x1 - x0)
    }
}
