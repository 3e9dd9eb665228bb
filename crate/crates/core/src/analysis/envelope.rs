//! Piecewise-linear upper and lower envelopes of an oscillating curve.
//!
//! Knots are the strict local maxima (upper) or minima (lower) of the
//! samples, plus both end samples so each envelope spans the whole grid.

use alloc::vec::Vec;

use super::{crossing, DecayCurve};
use crate::{Error, Result};

/// A piecewise-linear function through sorted knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Whether the first and last knots are plain end samples rather than
    /// extrema.
    open_start: bool,
    open_end: bool,
}

impl Envelope {
    fn through(x: &[f64], y: &[f64], keep: impl Fn(usize) -> bool) -> Self {
        let last = y.len() - 1;
        let idx: Vec<usize> = (0..y.len())
            .filter(|&i| i == 0 || i == last || keep(i))
            .collect();
        Self {
            x: idx.iter().map(|&i| x[i]).collect(),
            y: idx.iter().map(|&i| y[i]).collect(),
            open_start: !keep(0),
            open_end: !keep(last),
        }
    }

    pub fn knots_x(&self) -> &[f64] {
        &self.x
    }

    pub fn knots_y(&self) -> &[f64] {
        &self.y
    }

    /// Value at `t`, held constant outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t);
        let (x0, x1, y0, y1) = (self.x[i - 1], self.x[i], self.y[i - 1], self.y[i]);
        y0 + (t - x0) / (x1 - x0) * (y1 - y0)
    }

    /// Abscissa of the largest knot (the first one on ties).
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for i in 1..self.y.len() {
            if self.y[i] > self.y[best] {
                best = i;
            }
        }
        self.x[best]
    }

    /// First zero of the envelope among the knots at or after `start`:
    /// a zero knot or a sign change, located by linear interpolation.
    ///
    /// Segments that touch an open end sample are not trusted, since that
    /// sample may sit anywhere in an oscillation: a crossing on the first
    /// segment is skipped, and one on the last segment ends the search
    /// unless the final sample is exactly zero.
    pub fn first_zero_after(&self, start: f64) -> Option<f64> {
        let n = self.x.len();
        let first = self.x.partition_point(|&v| v < start);
        if first >= n {
            return None;
        }
        if self.y[first] == 0.0 {
            return Some(self.x[first]);
        }
        for i in first + 1..n {
            let (y0, y1) = (self.y[i - 1], self.y[i]);
            let hit = y1 == 0.0 || (y0 < 0.0) != (y1 < 0.0);
            if !hit || (i == 1 && self.open_start && y1 != 0.0) {
                continue;
            }
            if i == n - 1 && self.open_end && y1 != 0.0 {
                return None;
            }
            return Some(if y1 == 0.0 {
                self.x[i]
            } else {
                crossing(self.x[i - 1], y0, self.x[i], y1, 0.0)
            });
        }
        None
    }
}

/// Upper and lower envelopes of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub upper: Envelope,
    pub lower: Envelope,
    /// Interior local maxima and minima found.
    pub maxima: usize,
    pub minima: usize,
}

fn is_max(y: &[f64], i: usize) -> bool {
    i > 0 && i + 1 < y.len() && y[i] > y[i - 1] && y[i] > y[i + 1]
}

fn is_min(y: &[f64], i: usize) -> bool {
    i > 0 && i + 1 < y.len() && y[i] < y[i - 1] && y[i] < y[i + 1]
}

/// Envelopes through the strict local extrema of the curve.
pub fn envelopes(curve: &DecayCurve) -> Result<Envelopes> {
    let (x, y) = (curve.abscissa(), curve.values());
    let maxima = (0..y.len()).filter(|&i| is_max(y, i)).count();
    let minima = (0..y.len()).filter(|&i| is_min(y, i)).count();
    if maxima < 2 || minima < 2 {
        return Err(Error::InsufficientOscillation);
    }
    Ok(Envelopes {
        upper: Envelope::through(x, y, |i| is_max(y, i)),
        lower: Envelope::through(x, y, |i| is_min(y, i)),
        maxima,
        minima,
    })
}

/// Upper envelope without the oscillation requirement; a monotone curve
/// yields the chord between its end samples.
pub fn upper_envelope(x: &[f64], y: &[f64]) -> Result<Envelope> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: x.len().min(y.len()),
        });
    }
    Ok(Envelope::through(x, y, |i| is_max(y, i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample(f: impl Fn(f64) -> f64, end: f64, n: usize) -> DecayCurve {
        let x: Vec<f64> = (0..=n).map(|i| end * i as f64 / n as f64).collect();
        let y = x.iter().map(|&t| f(t)).collect();
        DecayCurve::new(x, y, 2).unwrap()
    }

    #[test]
    fn damped_sine_upper_envelope_tracks_amplitude() {
        let curve = sample(|t| (1.0 - t / 10.0) * (5.0 * t).sin(), 10.0, 10_000);
        let env = envelopes(&curve).unwrap();
        let (kx, ky) = (env.upper.knots_x(), env.upper.knots_y());
        // relative to the initial amplitude: near τ = 10 the sampled maxima
        // sit visibly below the shrinking amplitude
        for i in 1..kx.len() - 1 {
            let want = 1.0 - kx[i] / 10.0;
            assert!((ky[i] - want).abs() <= 0.02, "{} {}", ky[i], want);
        }
    }

    #[test]
    fn constant_curve_has_no_envelopes() {
        let curve = sample(|_| 0.2, 5.0, 100);
        assert_eq!(envelopes(&curve), Err(Error::InsufficientOscillation));
        let once = sample(|t| (t - 1.0).powi(2), 2.0, 100);
        assert_eq!(envelopes(&once), Err(Error::InsufficientOscillation));
    }

    #[test]
    fn envelopes_sandwich_samples() {
        let curve = sample(|t| (0.3 * t).exp() * (4.0 * t).cos() + 0.2 * t, 6.0, 3000);
        let env = envelopes(&curve).unwrap();
        let amp = curve.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // the end segments join a sample to the nearest extremum and do not
        // bound the curve
        let lo = env.upper.knots_x()[1].max(env.lower.knots_x()[1]);
        let hi = {
            let (u, l) = (env.upper.knots_x(), env.lower.knots_x());
            u[u.len() - 2].min(l[l.len() - 2])
        };
        for (&t, &v) in curve.abscissa().iter().zip(curve.values()) {
            if t < lo || t > hi {
                continue;
            }
            assert!(env.lower.eval(t) <= v + 0.02 * amp);
            assert!(env.upper.eval(t) >= v - 0.02 * amp);
        }
    }

    #[test]
    fn evaluation_and_zero_search() {
        let env = Envelope {
            x: vec![0.0, 1.0, 2.0, 3.0],
            y: vec![1.0, 3.0, 1.0, -1.0],
            open_start: false,
            open_end: false,
        };
        assert_eq!(env.eval(-1.0), 1.0);
        assert_eq!(env.eval(0.5), 2.0);
        assert_eq!(env.eval(5.0), -1.0);
        assert_eq!(env.argmax(), 1.0);
        assert_eq!(env.first_zero_after(1.0), Some(2.5));
        assert_eq!(env.first_zero_after(3.5), None);
        let open = Envelope {
            open_end: true,
            ..env.clone()
        };
        assert_eq!(open.first_zero_after(1.0), None);
    }

    #[test]
    fn monotone_curve_gets_a_chord() {
        let x = vec![0.0, 1.0, 2.0];
        let env = upper_envelope(&x, &[0.0, 1.0, 4.0]).unwrap();
        assert_eq!(env.knots_x(), &[0.0, 2.0]);
        assert_eq!(env.eval(1.0), 2.0);
    }
}
