//! Levenberg–Marquardt least squares and the two decay-time models.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Model families fitted to decay times as functions of the order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `a₁ coth(a₂ k + a₃)`
    Coth,
    /// `a + b tanh(d − c k)`, parameters ordered `(a, b, c, d)`
    Tanh,
}

impl Model {
    pub fn n_params(self) -> usize {
        match self {
            Model::Coth => 3,
            Model::Tanh => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Coth => "coth",
            Model::Tanh => "tanh",
        }
    }

    pub fn eval(self, params: &[f64], k: f64) -> f64 {
        match self {
            Model::Coth => params[0] / (params[1] * k + params[2]).tanh(),
            Model::Tanh => params[0] + params[1] * (params[3] - params[2] * k).tanh(),
        }
    }

    /// Partial derivatives with respect to each parameter.
    fn gradient(self, params: &[f64], k: f64, out: &mut [f64]) {
        match self {
            Model::Coth => {
                let u = params[1] * k + params[2];
                let sh = u.sinh();
                let d = -params[0] / (sh * sh);
                out[0] = 1.0 / u.tanh();
                out[1] = d * k;
                out[2] = d;
            }
            Model::Tanh => {
                let th = (params[3] - params[2] * k).tanh();
                let sech2 = 1.0 - th * th;
                out[0] = 1.0;
                out[1] = th;
                out[2] = -params[1] * sech2 * k;
                out[3] = params[1] * sech2;
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stopping rules for [`levenberg_marquardt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost reduction below which an accepted step ends the run.
    pub f_tol: f64,
    /// Relative step size below which the run ends.
    pub x_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            f_tol: 1e-14,
            x_tol: 1e-13,
            initial_damping: 1e-3,
        }
    }
}

/// Result of one local least-squares run.
#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub converged: bool,
    /// Cost after the start and after every accepted step.
    pub history: Vec<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if !(a[piv * n + col].abs() > 0.0) {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for c in col..n {
                a[row * n + c] -= f * a[col * n + c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row * n + c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Minimizes `Σ r_i(θ)²` from `start`.
///
/// `residuals(θ, r)` fills the `m` residuals; `jacobian(θ, j)` fills the
/// row-major `m × n` derivative matrix. The damping term is scaled by the
/// diagonal of `JᵀJ`. Only steps that lower the cost are accepted.
pub fn levenberg_marquardt(
    m: usize,
    start: &[f64],
    mut residuals: impl FnMut(&[f64], &mut [f64]),
    mut jacobian: impl FnMut(&[f64], &mut [f64]),
    options: &LmOptions,
) -> LmOutcome {
    let n = start.len();
    let mut theta = start.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    residuals(&theta, &mut r);
    let mut cost = sum_sq(&r);
    let mut history = vec![cost];
    if !cost.is_finite() {
        return LmOutcome {
            params: theta,
            cost,
            converged: false,
            history,
        };
    }
    let mut lambda = options.initial_damping;
    let mut converged = false;
    let mut trial_r = vec![0.0; m];
    'outer: for _ in 0..options.max_iterations {
        if cost == 0.0 {
            converged = true;
            break;
        }
        jacobian(&theta, &mut jac);
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for row in 0..m {
            let jr = &jac[row * n..(row + 1) * n];
            for a in 0..n {
                jtr[a] += jr[a] * r[row];
                for b in 0..n {
                    jtj[a * n + b] += jr[a] * jr[b];
                }
            }
        }
        loop {
            let mut lhs = jtj.clone();
            for a in 0..n {
                lhs[a * n + a] += lambda * jtj[a * n + a].max(1e-300);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let step = solve(lhs, rhs);
            if let Some(step) = step {
                let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
                residuals(&trial, &mut trial_r);
                let trial_cost = sum_sq(&trial_r);
                if trial_cost.is_finite() && trial_cost < cost {
                    let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let theta_norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let reduction = (cost - trial_cost) / cost;
                    theta = trial;
                    core::mem::swap(&mut r, &mut trial_r);
                    cost = trial_cost;
                    history.push(cost);
                    lambda = (lambda / 10.0).max(1e-15);
                    if reduction <= options.f_tol
                        || step_norm <= options.x_tol * (theta_norm + options.x_tol)
                    {
                        converged = true;
                        break 'outer;
                    }
                    continue 'outer;
                }
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill step at any damping: a stationary point to
                // working precision
                converged = (0..n).all(|a| {
                    jtr[a].abs() <= 1e-6 * (jtj[a * n + a] * cost).sqrt() || jtr[a] == 0.0
                });
                break 'outer;
            }
        }
    }
    LmOutcome {
        params: theta,
        cost,
        converged,
        history,
    }
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: Model,
    pub params: Vec<f64>,
    /// Residual sum of squares.
    pub residual: f64,
    pub converged: bool,
    /// Cost history of the winning local run.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn eval(&self, k: f64) -> f64 {
        self.model.eval(&self.params, k)
    }
}

/// Linear-LS amplitude for the coth model at fixed `(a₂, a₃)`.
fn coth_amplitude(points: &[(f64, f64)], a2: f64, a3: f64) -> f64 {
    let (mut gy, mut gg) = (0.0, 0.0);
    for &(k, y) in points {
        let g = 1.0 / (a2 * k + a3).tanh();
        gy += g * y;
        gg += g * g;
    }
    gy / gg
}

/// Linear-LS `(a, b)` for the tanh model at fixed `(c, d)`.
fn tanh_offsets(points: &[(f64, f64)], c: f64, d: f64) -> Option<(f64, f64)> {
    let (mut s1, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(k, y) in points {
        let g = (d - c * k).tanh();
        s1 += 1.0;
        sg += g;
        sgg += g * g;
        sy += y;
        sgy += g * y;
    }
    let det = s1 * sgg - sg * sg;
    if !(det.abs() > 1e-12 * s1 * sgg.max(1e-300)) {
        return None;
    }
    Some(((sgg * sy - sg * sgy) / det, (s1 * sgy - sg * sy) / det))
}

const COTH_RATES: [f64; 3] = [0.01, 0.1, 1.0];
const COTH_SHIFTS: [f64; 9] = [-1.0, -0.3, -0.1, -0.03, 0.0, 0.03, 0.1, 0.3, 1.0];
const TANH_RATES: [f64; 3] = [0.005, 0.05, 0.5];
const TANH_SHIFTS: [f64; 9] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0];

fn validate(points: &[(f64, f64)], needed: usize) -> Result<()> {
    if points.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            got: points.len(),
        });
    }
    for &(k, y) in points {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::OutOfRange {
                name: "k",
                value: k,
                expected: "positive order",
            });
        }
        if !y.is_finite() {
            return Err(Error::InvalidCurve("non-finite decay time".into()));
        }
    }
    Ok(())
}

fn fit_multistart(
    model: Model,
    points: &[(f64, f64)],
    starts: impl Iterator<Item = Vec<f64>>,
) -> FitResult {
    let m = points.len();
    let n = model.n_params();
    let options = LmOptions::default();
    let mut best: Option<LmOutcome> = None;
    for start in starts {
        let outcome = levenberg_marquardt(
            m,
            &start,
            |p, r| {
                for (ri, &(k, y)) in r.iter_mut().zip(points) {
                    *ri = model.eval(p, k) - y;
                }
            },
            |p, j| {
                for (row, &(k, _)) in points.iter().enumerate() {
                    model.gradient(p, k, &mut j[row * n..(row + 1) * n]);
                }
            },
            &options,
        );
        let better = match &best {
            None => outcome.cost.is_finite(),
            Some(b) => outcome.cost < b.cost,
        };
        if better {
            best = Some(outcome);
        }
    }
    match best {
        Some(b) => FitResult {
            model,
            converged: b.converged && b.params.iter().all(|v| v.is_finite()),
            params: b.params,
            residual: b.cost,
            history: b.history,
        },
        None => FitResult {
            model,
            params: vec![f64::NAN; n],
            residual: f64::INFINITY,
            converged: false,
            history: Vec::new(),
        },
    }
}

/// Fits `t_e(k) = a₁ coth(a₂ k + a₃)` from `(k, t_e)` pairs, reported with
/// `a₂ ≥ 0`.
pub fn fit_coth(points: &[(f64, f64)]) -> Result<FitResult> {
    validate(points, 4)?;
    let starts = COTH_RATES.iter().flat_map(move |&a2| {
        COTH_SHIFTS.iter().filter_map(move |&a3| {
            let a1 = coth_amplitude(points, a2, a3);
            a1.is_finite().then(|| vec![a1, a2, a3])
        })
    });
    let mut fit = fit_multistart(Model::Coth, points, starts);
    // coth is odd, so (a₁, a₂, a₃) and its negation describe the same curve
    if fit.params[1] < 0.0 {
        fit.params.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(fit)
}

/// Fits `τ_p(k) = a + b tanh(d − c k)` from `(k, τ_p)` pairs.
pub fn fit_tanh(points: &[(f64, f64)]) -> Result<FitResult> {
    validate(points, 4)?;
    let starts = TANH_RATES.iter().flat_map(move |&c| {
        TANH_SHIFTS
            .iter()
            .filter_map(move |&d| tanh_offsets(points, c, d).map(|(a, b)| vec![a, b, c, d]))
    });
    Ok(fit_multistart(Model::Tanh, points, starts))
}
