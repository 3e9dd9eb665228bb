//! Experiment orchestration: turns a [`RunConfig`] into CSV files and a
//! short text report.

use std::io;
use std::path::PathBuf;
use std::time::Instant;

use equispin_core::analysis::{
    cluster_trace_averaged, cluster_trace_envelope, decay_time_e, decay_time_perturbed,
    deficit_series, fit_coth, fit_tanh, second_order_series, upper_envelope, ClusterTrace,
    DecayCurve, DecayTime, FitResult, PerturbedDecay,
};
use equispin_core::coherence::{
    experiment_b_sweep, fourier_area_check, intensities_experiment_a, intensities_experiment_b,
    DephasingTable, IntensitySeries, Mixing,
};
use equispin_core::propagator::diagonalize;
use equispin_core::spin::{build_hdz, build_heff, build_hmq, BlockOperator, SpinSystem};

use crate::config::{ConfigError, Experiment, RunConfig};
use crate::fft::RustFft;
use crate::oracle::{self, OracleError, Which};
use crate::output::{num, CsvWriter, Staging};

/// What to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Spectra, decay times, fits and clusters for the configured experiment.
    Run,
    Simulate,
    DecayTimes,
    Clusters,
    Perturbed,
    Verify,
    Conservation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Simulate => "simulate",
            Command::DecayTimes => "decay-times",
            Command::Clusters => "clusters",
            Command::Perturbed => "perturbed",
            Command::Verify => "verify",
            Command::Conservation => "conservation",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] equispin_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("check failed: {0}")]
    Check(String),
}

impl RunError {
    /// 1 for configuration problems, 2 for everything that went wrong
    /// while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Oracle(_) => 1,
            _ => 2,
        }
    }
}

/// Files written and lines for the terminal.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub report: Vec<String>,
    pub files: Vec<PathBuf>,
}

type Res<T> = Result<T, RunError>;

/// Runs `command` on a pool of `config.workers` threads. Output appears in
/// the output directory only if every step succeeds.
pub fn execute(command: Command, config: &RunConfig) -> Res<Outcome> {
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| ConfigError::new("workers", e.to_string()))?;
    let mut stage = Staging::new(&config.output_dir)?;
    let mut report = Vec::new();
    pool.install(|| dispatch(command, config, &mut stage, &mut report))?;
    let meta = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "config": config,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    stage.json("run_meta.json", &meta)?;
    let files = stage.commit()?;
    Ok(Outcome { report, files })
}

fn dispatch(
    command: Command,
    cfg: &RunConfig,
    stage: &mut Staging,
    report: &mut Vec<String>,
) -> Res<()> {
    let wants = |c: Command| command == Command::Run || command == c;
    match command {
        Command::Perturbed => return perturbed(cfg, stage, report),
        Command::Verify => return verify(cfg, stage, report),
        Command::Conservation => return conservation(cfg, stage, report),
        _ => {}
    }
    match cfg.experiment {
        Experiment::A => {
            for &n in &cfg.n_spins {
                experiment_a(n, cfg, stage, report, wants)?;
            }
            Ok(())
        }
        Experiment::B => {
            for &n in &cfg.n_spins {
                for &p in &cfg.p {
                    experiment_b(n, p, cfg, stage, report, wants)?;
                }
            }
            Ok(())
        }
        Experiment::Verify if command == Command::Run => verify(cfg, stage, report),
        Experiment::Conservation if command == Command::Run => conservation(cfg, stage, report),
        other => Err(ConfigError::new(
            "experiment",
            format!("`{}` needs experiment A or B, got {other}", command.name()),
        )
        .into()),
    }
}

fn tag(experiment: &str, n: u32, p: Option<f64>) -> String {
    match p {
        Some(p) => format!("{experiment}_N{n}_p{p}"),
        None => format!("{experiment}_N{n}"),
    }
}

const SPECTRUM_HEADER: [&str; 7] = [
    "experiment",
    "n_spins",
    "p",
    "tau_bar",
    "t_bar",
    "k",
    "intensity",
];
const DECAY_HEADER: [&str; 6] = ["n_spins", "p", "k", "decay_time", "method", "status"];
const FIT_HEADER: [&str; 6] = [
    "n_spins",
    "p",
    "model",
    "parameters",
    "residual",
    "converged",
];
const CLUSTER_HEADER: [&str; 4] = ["abscissa", "n_c_all", "n_c_nonneg", "j_min"];

/// Writes orders `k = 0, 2, 4, …`; `J_{-k} = J_k` and odd orders vanish.
fn write_spectrum(
    w: &mut CsvWriter,
    experiment: &str,
    p: f64,
    series: &IntensitySeries,
    tau: impl Fn(f64) -> String,
    t: impl Fn(f64) -> String,
) -> Res<()> {
    let n = series.n_spins() as usize;
    for (i, &x) in series.abscissa().iter().enumerate() {
        let row = series.row(i);
        for k in (0..=n).step_by(2) {
            w.write_record([
                experiment.to_owned(),
                n.to_string(),
                num(p),
                tau(x),
                t(x),
                k.to_string(),
                num(row[n + k]),
            ])?;
        }
    }
    Ok(())
}

fn write_fit(w: &mut CsvWriter, n: u32, p: f64, fit: &FitResult) -> Res<()> {
    let params: Vec<String> = fit.params.iter().map(|&v| num(v)).collect();
    w.write_record([
        n.to_string(),
        num(p),
        fit.model.as_str().to_owned(),
        params.join(";"),
        num(fit.residual),
        fit.converged.to_string(),
    ])?;
    Ok(())
}

fn write_clusters(w: &mut CsvWriter, trace: &ClusterTrace) -> Res<()> {
    for (&x, c) in trace.abscissa.iter().zip(&trace.counts) {
        w.write_record([
            num(x),
            c.all.to_string(),
            c.nonneg.to_string(),
            num(trace.j_min),
        ])?;
    }
    Ok(())
}

fn fit_summary(fit: &FitResult) -> String {
    let params: Vec<String> = fit.params.iter().map(|v| format!("{v:.6}")).collect();
    format!(
        "{} fit ({}) residual {:.3e}{}",
        fit.model,
        params.join(", "),
        fit.residual,
        if fit.converged {
            ""
        } else {
            " [not converged]"
        }
    )
}

/// Decay time per populated order of an experiment-A series: orders whose
/// first sample reaches `j_min`.
pub fn decay_times_a(series: &IntensitySeries, j_min: f64) -> Res<Vec<(i64, DecayTime)>> {
    let n = series.n_spins() as i64;
    let mut out = Vec::new();
    for k in (0..=n).step_by(2) {
        let curve = series.curve(k);
        if curve[0] < j_min {
            continue;
        }
        let c = DecayCurve::new(series.abscissa().to_vec(), curve, k)?;
        out.push((k, decay_time_e(&c)?));
    }
    Ok(out)
}

/// `(k, t_e)` pairs with `k ≥ 2` that reached `1/e`.
pub fn fit_points_a(times: &[(i64, DecayTime)]) -> Vec<(f64, f64)> {
    times
        .iter()
        .filter(|(k, _)| *k >= 2)
        .filter_map(|(k, t)| t.value().map(|v| (*k as f64, v)))
        .collect()
}

fn experiment_a(
    n: u32,
    cfg: &RunConfig,
    stage: &mut Staging,
    report: &mut Vec<String>,
    wants: impl Fn(Command) -> bool,
) -> Res<()> {
    let system = SpinSystem::dimensionless(n)?;
    let table = DephasingTable::averaged(&system, &cfg.window)?;
    let series = table.series(&cfg.t_grid.points());
    let t = tag("A", n, None);
    if wants(Command::Simulate) {
        let mut w = stage.csv(&format!("spectrum_{t}.csv"), &SPECTRUM_HEADER)?;
        write_spectrum(&mut w, "A", 0.0, &series, |_| String::new(), num)?;
        w.flush()?;
    }
    if wants(Command::DecayTimes) {
        let times = decay_times_a(&series, cfg.j_min)?;
        let mut w = stage.csv(&format!("decay_times_{t}.csv"), &DECAY_HEADER)?;
        for (k, d) in &times {
            let (value, status) = match d {
                DecayTime::Reached(v) => (num(*v), "ok"),
                DecayTime::NotReached => (String::new(), "not_reached"),
            };
            w.write_record([
                n.to_string(),
                num(0.0),
                k.to_string(),
                value,
                "e_fold".into(),
                status.into(),
            ])?;
        }
        w.flush()?;
        let points = fit_points_a(&times);
        report.push(format!(
            "N={n} A: t_e for {} populated orders k >= 2",
            points.len()
        ));
        if points.len() >= 4 {
            let fit = fit_coth(&points)?;
            let mut w = stage.csv(&format!("fits_{t}.csv"), &FIT_HEADER)?;
            write_fit(&mut w, n, 0.0, &fit)?;
            w.flush()?;
            report.push(format!("N={n} A: {}", fit_summary(&fit)));
        }
    }
    if wants(Command::Clusters) {
        let trace = cluster_trace_averaged(&series, cfg.j_min)?;
        let mut w = stage.csv(&format!("clusters_{t}.csv"), &CLUSTER_HEADER)?;
        write_clusters(&mut w, &trace)?;
        w.flush()?;
        if let Some((x, c)) = trace.peak() {
            report.push(format!("N={n} A: largest cluster {c} at t = {x}"));
        }
    }
    Ok(())
}

/// Outcome of the envelope analysis for one order.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderDecay {
    Decay(PerturbedDecay),
    /// Too few extrema to build envelopes.
    Flat,
}

/// `τ_p(k)` for every even `k ≥ 2` whose upper envelope reaches `j_min`
/// somewhere on the grid.
pub fn decay_times_b(series: &IntensitySeries, j_min: f64) -> Res<Vec<(i64, OrderDecay)>> {
    let n = series.n_spins() as i64;
    let x = series.abscissa();
    let mut out = Vec::new();
    for k in (2..=n).step_by(2) {
        let curve = series.curve(k);
        let env = upper_envelope(x, &curve)?;
        if !env.knots_y().iter().any(|&v| v >= j_min) {
            continue;
        }
        let c = DecayCurve::new(x.to_vec(), curve, k)?;
        let d = match decay_time_perturbed(&c) {
            Ok(d) => OrderDecay::Decay(d),
            Err(equispin_core::Error::InsufficientOscillation) => OrderDecay::Flat,
            Err(e) => return Err(e.into()),
        };
        out.push((k, d));
    }
    Ok(out)
}

pub fn fit_points_b(times: &[(i64, OrderDecay)]) -> Vec<(f64, f64)> {
    times
        .iter()
        .filter_map(|(k, d)| match d {
            OrderDecay::Decay(d) => d.value().map(|v| (*k as f64, v)),
            OrderDecay::Flat => None,
        })
        .collect()
}

fn experiment_b(
    n: u32,
    p: f64,
    cfg: &RunConfig,
    stage: &mut Staging,
    report: &mut Vec<String>,
    wants: impl Fn(Command) -> bool,
) -> Res<()> {
    let system = SpinSystem::dimensionless(n)?;
    let series = experiment_b_sweep(&system, p, &cfg.tau_grid.points(), cfg.mixing)?;
    let t = tag("B", n, Some(p));
    report.push(format!("N={n} p={p} B: mixing {}", cfg.mixing));
    if wants(Command::Simulate) {
        let mut w = stage.csv(&format!("spectrum_{t}.csv"), &SPECTRUM_HEADER)?;
        write_spectrum(&mut w, "B", p, &series, num, |_| num(0.0))?;
        w.flush()?;
    }
    if wants(Command::DecayTimes) {
        let times = decay_times_b(&series, cfg.j_min)?;
        let mut w = stage.csv(&format!("decay_times_{t}.csv"), &DECAY_HEADER)?;
        for (k, d) in &times {
            let (value, status) = match d {
                OrderDecay::Decay(PerturbedDecay::Reached { tau_p, .. }) => (num(*tau_p), "ok"),
                OrderDecay::Decay(PerturbedDecay::NoCrossings { .. }) => {
                    (String::new(), "no_crossings")
                }
                OrderDecay::Decay(PerturbedDecay::NotReached) | OrderDecay::Flat => {
                    (String::new(), "not_reached")
                }
            };
            w.write_record([
                n.to_string(),
                num(p),
                k.to_string(),
                value,
                "envelope_zero".into(),
                status.into(),
            ])?;
        }
        w.flush()?;
        let points = fit_points_b(&times);
        report.push(format!(
            "N={n} p={p} B: tau_p for {} of {} populated orders",
            points.len(),
            times.len()
        ));
        if points.len() >= 4 {
            let fit = fit_tanh(&points)?;
            let mut w = stage.csv(&format!("fits_{t}.csv"), &FIT_HEADER)?;
            write_fit(&mut w, n, p, &fit)?;
            w.flush()?;
            report.push(format!("N={n} p={p} B: {}", fit_summary(&fit)));
        }
    }
    if wants(Command::Clusters) {
        let trace = cluster_trace_envelope(&series, cfg.j_min)?;
        let mut w = stage.csv(&format!("clusters_{t}.csv"), &CLUSTER_HEADER)?;
        write_clusters(&mut w, &trace)?;
        w.flush()?;
        if let Some((x, c)) = trace.peak() {
            report.push(format!("N={n} p={p} B: largest cluster {c} at tau = {x}"));
        }
    }
    Ok(())
}

fn perturbed(cfg: &RunConfig, stage: &mut Staging, report: &mut Vec<String>) -> Res<()> {
    let taus = cfg.tau_grid.points();
    for &n in &cfg.n_spins {
        let system = SpinSystem::dimensionless(n)?;
        let series = second_order_series(&system, &taus)?;
        let mut w = stage.csv(
            &format!("perturbation_N{n}.csv"),
            &[
                "n_spins",
                "tau_bar",
                "a_p_1e-3",
                "a_p_5e-4",
                "a_extrapolated",
                "closed_form_midpoint",
                "closed_form_initial",
                "closed_form_final",
            ],
        )?;
        for s in &series {
            w.write_record([
                n.to_string(),
                num(s.tau),
                num(s.coarse),
                num(s.fine),
                num(s.extrapolated),
                num(s.closed_form),
                num(s.closed_form_initial),
                num(s.closed_form_final),
            ])?;
        }
        w.flush()?;
        let mut w = stage.csv(
            &format!("deficit_N{n}.csv"),
            &["n_spins", "p", "tau_bar", "deficit_over_p2"],
        )?;
        for &p in cfg.p.iter().filter(|&&p| p > 0.0) {
            for (tau, d) in taus.iter().zip(deficit_series(&system, &taus, p)?) {
                w.write_record([n.to_string(), num(p), num(*tau), num(d)])?;
            }
        }
        w.flush()?;
        let negative = series
            .iter()
            .filter(|s| s.tau > 0.0 && s.extrapolated <= 0.0)
            .count();
        report.push(format!(
            "N={n}: A(tau) on {} points, {negative} non-positive for tau > 0",
            series.len()
        ));
    }
    Ok(())
}

/// One oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub check: String,
    pub p: f64,
    pub tau: f64,
    pub t: f64,
    pub max_abs_diff: f64,
}

pub const VERIFY_TOLERANCE: f64 = 1e-10;
const VERIFY_TAUS: [f64; 5] = [0.1, 0.6, 1.3, 2.9, 7.4];
const VERIFY_TS: [f64; 5] = [0.0, 0.05, 0.4, 1.7, 5.0];
const VERIFY_PS: [f64; 5] = [0.0, 0.1, 0.3, 0.6, 1.0];

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Eigenvalues of every block, repeated by sector degeneracy.
fn block_spectrum(op: &BlockOperator) -> Res<Vec<f64>> {
    let eig = diagonalize(op)?;
    let mut all = Vec::new();
    for (i, sec) in eig.sectors().iter().enumerate() {
        let times: u64 = sec
            .degeneracy()
            .try_into()
            .map_err(|_| RunError::Check("degeneracy overflow".into()))?;
        for _ in 0..times {
            all.extend_from_slice(eig.eigenvalues(i));
        }
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Block pipeline against the product-basis oracle: spectra of the three
/// Hamiltonians and intensities of both experiments on 5×5 grids.
pub fn verify_system(n: u32) -> Res<Vec<VerifyRow>> {
    if n > oracle::MAX_SPINS {
        return Err(OracleError::TooManySpins(n).into());
    }
    let system = SpinSystem::dimensionless(n)?;
    let mut rows = Vec::new();
    let spectra = [
        ("spectrum_hmq", 0.0, build_hmq(&system), Which::Hmq),
        ("spectrum_hdz", 0.0, build_hdz(&system), Which::Hdz),
        (
            "spectrum_heff",
            0.3,
            build_heff(&system, 0.3)?,
            Which::Heff(0.3),
        ),
    ];
    for (name, p, op, which) in spectra {
        let full = oracle::build_full(n, 1.0, which)?.spectrum();
        let blocks = block_spectrum(&op)?;
        let diff = if full.len() == blocks.len() {
            max_diff(&full, &blocks)
        } else {
            f64::INFINITY
        };
        rows.push(VerifyRow {
            check: name.into(),
            p,
            tau: f64::NAN,
            t: f64::NAN,
            max_abs_diff: diff,
        });
    }
    for &tau in &VERIFY_TAUS {
        for &t in &VERIFY_TS {
            let got = intensities_experiment_a(&system, tau, t)?;
            let want = oracle::oracle_intensities_a(n, 1.0, tau, t)?;
            rows.push(VerifyRow {
                check: "A".into(),
                p: 0.0,
                tau,
                t,
                max_abs_diff: max_diff(got.as_slice(), &want),
            });
        }
    }
    for mixing in [Mixing::IdealMq, Mixing::MatchedHeff] {
        for &p in &VERIFY_PS {
            for &tau in &VERIFY_TAUS {
                let got = intensities_experiment_b(&system, p, tau, mixing)?;
                let want = oracle::oracle_intensities_b(n, 1.0, p, tau, mixing)?;
                rows.push(VerifyRow {
                    check: format!("B_{mixing}"),
                    p,
                    tau,
                    t: 0.0,
                    max_abs_diff: max_diff(got.as_slice(), &want),
                });
            }
        }
    }
    Ok(rows)
}

fn verify(cfg: &RunConfig, stage: &mut Staging, report: &mut Vec<String>) -> Res<()> {
    let mut worst_overall = 0.0f64;
    for &n in &cfg.n_spins {
        let rows = verify_system(n)?;
        let mut w = stage.csv(
            &format!("verify_N{n}.csv"),
            &["check", "n_spins", "p", "tau_bar", "t_bar", "max_abs_diff"],
        )?;
        for r in &rows {
            let opt = |v: f64| if v.is_nan() { String::new() } else { num(v) };
            w.write_record([
                r.check.clone(),
                n.to_string(),
                num(r.p),
                opt(r.tau),
                opt(r.t),
                num(r.max_abs_diff),
            ])?;
        }
        w.flush()?;
        let worst = rows.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
        worst_overall = worst_overall.max(worst);
        let verdict = if worst <= VERIFY_TOLERANCE { "<=" } else { ">" };
        report.push(format!(
            "N={n}: {} comparisons, max |Δ| = {worst:.3e} {verdict} {VERIFY_TOLERANCE:e}",
            rows.len()
        ));
    }
    if !(worst_overall <= VERIFY_TOLERANCE) {
        return Err(RunError::Check(format!(
            "oracle mismatch {worst_overall:.3e} exceeds {VERIFY_TOLERANCE:e}"
        )));
    }
    Ok(())
}

fn conservation(cfg: &RunConfig, stage: &mut Staging, report: &mut Vec<String>) -> Res<()> {
    for &n in &cfg.n_spins {
        let system = SpinSystem::dimensionless(n)?;
        let areas = fourier_area_check(&system, cfg.tau, cfg.t_ev, cfg.samples, &RustFft)?;
        let mut w = stage.csv(
            &format!("conservation_N{n}.csv"),
            &["n_spins", "tau_bar", "k", "area_analytic", "area_dft"],
        )?;
        for (i, (a, b)) in areas.analytic.iter().zip(&areas.numeric).enumerate() {
            let k = i as i64 - n as i64;
            w.write_record([n.to_string(), num(cfg.tau), k.to_string(), num(*a), num(*b)])?;
        }
        w.flush()?;
        let (a, b) = (areas.analytic_sum(), areas.numeric_sum());
        report.push(format!(
            "N={n} tau={}: sum A_k analytic = {a:.16}, DFT = {b:.16}, relative gap {:.3e}",
            cfg.tau,
            (b - a).abs() / a
        ));
        if (a - 0.5).abs() > 1e-12 || (b - a).abs() / a > 1e-3 {
            return Err(RunError::Check(format!("area sum not conserved at N={n}")));
        }
    }
    Ok(())
}
