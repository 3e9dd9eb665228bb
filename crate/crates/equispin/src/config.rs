//! Run configuration: a flat TOML file, overridden field by field from the
//! command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use equispin_core::coherence::{AveragingWindow, Mixing};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "EQUISPIN_WORKERS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    /// Ideal preparation, dephasing during the evolution period.
    A,
    /// Perturbed preparation, no evolution period.
    B,
    Verify,
    Conservation,
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Experiment::A),
            "B" | "b" => Ok(Experiment::B),
            "verify" => Ok(Experiment::Verify),
            "conservation" => Ok(Experiment::Conservation),
            other => Err(format!(
                "unknown experiment `{other}` (expected A, B, verify or conservation)"
            )),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::A => "A",
            Experiment::B => "B",
            Experiment::Verify => "verify",
            Experiment::Conservation => "conservation",
        })
    }
}

/// Uniform grid `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, String> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if start < 0.0 {
            return Err("grid must start at a non-negative time".into());
        }
        if !(start < stop) {
            return Err(format!("start {start} must be below stop {stop}"));
        }
        if !(step > 0.0) {
            return Err(format!("step {step} must be positive"));
        }
        Ok(Self { start, stop, step })
    }

    /// Number of intervals; the last point lands on `stop` when the span is
    /// a whole number of steps.
    fn intervals(&self) -> usize {
        ((self.stop - self.start) / self.step * (1.0 + 1e-12)).floor() as usize
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.intervals())
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    /// `start:stop:step`
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got `{s}`"));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{t}` is not a number ({e})"))
        };
        Grid::new(num(a)?, num(b)?, num(h)?)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Everything a run needs, fully resolved. Times are dimensionless
/// (`τ̄ = Dτ`, `t̄ = Dt`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n_spins: Vec<u32>,
    pub p: Vec<f64>,
    pub tau_grid: Grid,
    pub t_grid: Grid,
    /// Fixed preparation time for single-τ outputs.
    pub tau: f64,
    pub j_min: f64,
    #[serde(serialize_with = "window")]
    pub window: AveragingWindow,
    #[serde(serialize_with = "display")]
    pub mixing: Mixing,
    /// Evolution span and sample count of the conservation check.
    pub t_ev: f64,
    pub samples: usize,
    pub output_dir: PathBuf,
    pub workers: usize,
}

fn display<S: serde::Serializer, T: fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn window<S: serde::Serializer>(w: &AveragingWindow, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("AveragingWindow", 3)?;
    st.serialize_field("tau0", &w.tau0)?;
    st.serialize_field("periods", &w.periods)?;
    st.serialize_field("steps", &w.steps)?;
    st.end()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::A,
            n_spins: vec![201],
            p: vec![0.001],
            tau_grid: Grid::new(0.0, 60.0, 0.01).expect("valid"),
            t_grid: Grid::new(0.0, 0.2, 0.001).expect("valid"),
            tau: 1.0,
            j_min: 0.005,
            window: AveragingWindow::default(),
            mixing: Mixing::IdealMq,
            t_ev: 10.0,
            samples: 4096,
            output_dir: PathBuf::from("out"),
            workers: 1,
        }
    }
}

/// Optional settings, as read from a file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub n_spins: Option<Vec<u32>>,
    pub p: Option<Vec<f64>>,
    pub tau_grid: Option<String>,
    pub t_grid: Option<String>,
    pub tau: Option<f64>,
    pub j_min: Option<f64>,
    pub tau0: Option<f64>,
    pub periods: Option<f64>,
    pub steps: Option<usize>,
    pub mixing: Option<String>,
    pub t_ev: Option<f64>,
    pub samples: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let message = e.message().to_owned();
            // serde names the unknown or mistyped key in its message
            ConfigError::new("config", format!("{}: {message}", path.display()))
        })
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment, n_spins, p, tau_grid, t_grid, tau, j_min, tau0, periods, steps, mixing,
            t_ev, samples, output_dir, workers
        )
    }

    /// Applies the overrides to the defaults and checks every field.
    /// `default_workers` comes from the environment when set.
    pub fn resolve(self, default_workers: Option<usize>) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(w) = default_workers {
            cfg.workers = w;
        }
        if let Some(e) = self.experiment {
            cfg.experiment = e.parse().map_err(|m| ConfigError::new("experiment", m))?;
        }
        if let Some(n) = self.n_spins {
            cfg.n_spins = n;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(g) = self.tau_grid {
            cfg.tau_grid = g.parse().map_err(|m| ConfigError::new("tau_grid", m))?;
        }
        if let Some(g) = self.t_grid {
            cfg.t_grid = g.parse().map_err(|m| ConfigError::new("t_grid", m))?;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(j) = self.j_min {
            cfg.j_min = j;
        }
        if let Some(t) = self.tau0 {
            cfg.window.tau0 = t;
        }
        if let Some(p) = self.periods {
            cfg.window.periods = p;
        }
        if let Some(s) = self.steps {
            cfg.window.steps = s;
        }
        if let Some(m) = self.mixing {
            cfg.mixing = m.parse().map_err(|m| ConfigError::new("mixing", m))?;
        }
        if let Some(t) = self.t_ev {
            cfg.t_ev = t;
        }
        if let Some(s) = self.samples {
            cfg.samples = s;
        }
        if let Some(o) = self.output_dir {
            cfg.output_dir = o;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_spins.is_empty() || self.n_spins.contains(&0) {
            return Err(ConfigError::new(
                "n_spins",
                "need at least one positive spin count",
            ));
        }
        if self.p.is_empty() {
            return Err(ConfigError::new("p", "need at least one value"));
        }
        if let Some(bad) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ConfigError::new("p", format!("{bad} outside [0, 1]")));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(ConfigError::new("tau", "must be finite and non-negative"));
        }
        if !(self.j_min > 0.0 && self.j_min.is_finite()) {
            return Err(ConfigError::new("j_min", "must be positive"));
        }
        if !(self.window.tau0 >= 0.0 && self.window.tau0.is_finite()) {
            return Err(ConfigError::new("tau0", "must be finite and non-negative"));
        }
        if !(self.window.periods > 0.0 && self.window.periods.is_finite()) {
            return Err(ConfigError::new("periods", "must be positive"));
        }
        if let Err(e) = self.window.validate() {
            return Err(ConfigError::new("steps", e.to_string()));
        }
        if !(self.t_ev > 0.0 && self.t_ev.is_finite()) {
            return Err(ConfigError::new("t_ev", "must be positive"));
        }
        if self.samples < 2 {
            return Err(ConfigError::new("samples", "need at least 2"));
        }
        if self.workers == 0 {
            return Err(ConfigError::new("workers", "must be at least 1"));
        }
        if matches!(self.experiment, Experiment::Verify) {
            if let Some(n) = self.n_spins.iter().find(|&&n| n > crate::oracle::MAX_SPINS) {
                return Err(ConfigError::new(
                    "n_spins",
                    format!("verify compares against the product basis, which stops at {} spins (got {n})", crate::oracle::MAX_SPINS),
                ));
            }
        }
        Ok(())
    }
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| ConfigError::new(WORKERS_ENV, format!("`{v}`: {e}"))),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse_and_include_the_end() {
        let g: Grid = "0:0.2:0.001".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 201);
        assert!((pts[200] - 0.2).abs() < 1e-12);
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert_eq!("0:1:0.3".parse::<Grid>().unwrap().points().len(), 4);
    }

    #[test]
    fn file_values_are_overridden_by_flags() {
        let file: Overrides =
            toml::from_str("experiment = \"B\"\nn_spins = [21, 51]\np = [0.002]\nj_min = 0.01\n")
                .unwrap();
        let flags = Overrides {
            n_spins: Some(vec![11]),
            ..Default::default()
        };
        let cfg = file.merge(flags).resolve(Some(3)).unwrap();
        assert_eq!(cfg.experiment, Experiment::B);
        assert_eq!(cfg.n_spins, vec![11]);
        assert_eq!(cfg.p, vec![0.002]);
        assert_eq!(cfg.j_min, 0.01);
        assert_eq!(cfg.workers, 3);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = |o: Overrides| o.resolve(None).unwrap_err().field;
        assert_eq!(
            bad(Overrides {
                p: Some(vec![1.5]),
                ..Default::default()
            }),
            "p"
        );
        assert_eq!(
            bad(Overrides {
                j_min: Some(0.0),
                ..Default::default()
            }),
            "j_min"
        );
        assert_eq!(
            bad(Overrides {
                tau_grid: Some("5:1:1".into()),
                ..Default::default()
            }),
            "tau_grid"
        );
        assert_eq!(
            bad(Overrides {
                steps: Some(10),
                ..Default::default()
            }),
            "steps"
        );
        assert_eq!(
            bad(Overrides {
                experiment: Some("verify".into()),
                n_spins: Some(vec![20]),
                ..Default::default()
            }),
            "n_spins"
        );
        assert!(toml::from_str::<Overrides>("n_spin = [3]").is_err());
    }
}
