//! Coherence-cluster size: how many orders carry at least `J_min`.

use alloc::vec::Vec;

use super::envelope::upper_envelope;
use crate::coherence::IntensitySeries;
use crate::{Error, Result};

/// Populated orders counted over `k ∈ [-N, N]` and over `k ∈ [0, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClusterCount {
    pub all: usize,
    pub nonneg: usize,
}

fn check_threshold(j_min: f64) -> Result<()> {
    if j_min > 0.0 && j_min.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "j_min",
            value: j_min,
            expected: "positive and finite",
        })
    }
}

/// Counts entries `≥ j_min` in a row ordered `k = -N, …, N`.
pub fn cluster_size(row: &[f64], j_min: f64) -> Result<ClusterCount> {
    check_threshold(j_min)?;
    if row.len() % 2 == 0 {
        return Err(Error::InvalidCurve(alloc::format!(
            "a row of orders -N..=N has odd length, got {}",
            row.len()
        )));
    }
    let zero = row.len() / 2;
    let mut count = ClusterCount::default();
    for (i, &v) in row.iter().enumerate() {
        if v >= j_min {
            count.all += 1;
            if i >= zero {
                count.nonneg += 1;
            }
        }
    }
    Ok(count)
}

/// Cluster size along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTrace {
    pub abscissa: Vec<f64>,
    pub counts: Vec<ClusterCount>,
    pub j_min: f64,
}

impl ClusterTrace {
    /// Largest `all` count and the first abscissa where it occurs.
    pub fn peak(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (&x, c) in self.abscissa.iter().zip(&self.counts) {
            if best.map_or(true, |(_, b)| c.all > b) {
                best = Some((x, c.all));
            }
        }
        best
    }

    /// Abscissae where the `all` count attains its maximum.
    pub fn peak_positions(&self) -> Vec<f64> {
        let Some((_, max)) = self.peak() else {
            return Vec::new();
        };
        self.abscissa
            .iter()
            .zip(&self.counts)
            .filter(|(_, c)| c.all == max)
            .map(|(&x, _)| x)
            .collect()
    }
}

/// Experiment A: counts the averaged intensities at every grid point.
pub fn cluster_trace_averaged(series: &IntensitySeries, j_min: f64) -> Result<ClusterTrace> {
    check_threshold(j_min)?;
    let counts = (0..series.len())
        .map(|i| cluster_size(series.row(i), j_min))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterTrace {
        abscissa: series.abscissa().to_vec(),
        counts,
        j_min,
    })
}

/// Experiment B: counts the upper envelopes `Ĵ⁺_k(τ̄)` at every grid point.
pub fn cluster_trace_envelope(series: &IntensitySeries, j_min: f64) -> Result<ClusterTrace> {
    check_threshold(j_min)?;
    let x = series.abscissa();
    let n = series.n_spins() as i64;
    let mut counts = alloc::vec![ClusterCount::default(); x.len()];
    for k in -n..=n {
        let env = upper_envelope(x, &series.curve(k))?;
        for (c, &t) in counts.iter_mut().zip(x) {
            if env.eval(t) >= j_min {
                c.all += 1;
                if k >= 0 {
                    c.nonneg += 1;
                }
            }
        }
    }
    Ok(ClusterTrace {
        abscissa: x.to_vec(),
        counts,
        j_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn counts_both_signs_and_zero() {
        let row = [0.001, 0.2, 0.0, 0.5, 0.0, 0.2, 0.01];
        assert_eq!(
            cluster_size(&row, 0.005).unwrap(),
            ClusterCount { all: 4, nonneg: 3 }
        );
        assert_eq!(
            cluster_size(&row, 0.3).unwrap(),
            ClusterCount { all: 1, nonneg: 1 }
        );
        assert!(cluster_size(&row, 0.0).is_err());
        assert!(cluster_size(&[1.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn peak_reports_first_maximum() {
        let trace = ClusterTrace {
            abscissa: vec![0.0, 1.0, 2.0, 3.0],
            counts: [1, 5, 5, 3]
                .iter()
                .map(|&all| ClusterCount { all, nonneg: all })
                .collect(),
            j_min: 0.005,
        };
        assert_eq!(trace.peak(), Some((1.0, 5)));
        assert_eq!(trace.peak_positions(), vec![1.0, 2.0]);
    }
}
