use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use equispin::config::{workers_from_env, Overrides, RunConfig, WORKERS_ENV};
use equispin::runner::{execute, Command};

/// Multiple-quantum NMR coherence dynamics of N equivalent spins.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Write coherence intensities on the configured grid.
    Simulate(Flags),
    /// Decay time per coherence order and the model fit.
    DecayTimes(Flags),
    /// Coherence-cluster size along the grid.
    Clusters(Flags),
    /// Second-order loss of total intensity under the perturbation.
    Perturbed(Flags),
    /// Compare the block pipeline with the full product-basis simulation.
    Verify(Flags),
    /// Conservation of the summed frequency-domain areas.
    Conservation(Flags),
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// Flat TOML file with any of the settings below (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// A, B, verify or conservation.
    #[arg(long, global = true)]
    experiment: Option<String>,
    /// Spin counts, comma separated.
    #[arg(long = "n", global = true, value_delimiter = ',')]
    n_spins: Option<Vec<u32>>,
    /// Perturbation strengths, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Preparation-time grid start:stop:step.
    #[arg(long, global = true)]
    tau_grid: Option<String>,
    /// Evolution-time grid start:stop:step.
    #[arg(long, global = true)]
    t_grid: Option<String>,
    /// Fixed preparation time.
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    j_min: Option<f64>,
    /// Start of the averaging window.
    #[arg(long, global = true)]
    tau0: Option<f64>,
    /// Averaging window length in periods of 2π/√3.
    #[arg(long, global = true)]
    periods: Option<f64>,
    /// Trapezoid intervals across the averaging window.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// ideal_mq or matched_heff.
    #[arg(long, global = true)]
    mixing: Option<String>,
    /// Evolution span of the conservation check.
    #[arg(long, global = true)]
    t_ev: Option<f64>,
    /// Samples of the conservation check.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long = "out", global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default from EQUISPIN_WORKERS, else 1).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

impl Flags {
    fn overrides(self) -> Overrides {
        Overrides {
            experiment: self.experiment,
            n_spins: self.n_spins,
            p: self.p,
            tau_grid: self.tau_grid,
            t_grid: self.t_grid,
            tau: self.tau,
            j_min: self.j_min,
            tau0: self.tau0,
            periods: self.periods,
            steps: self.steps,
            mixing: self.mixing,
            t_ev: self.t_ev,
            samples: self.samples,
            output_dir: self.output_dir,
            workers: self.workers,
        }
    }
}

fn resolve(flags: Flags) -> Result<RunConfig, equispin::config::ConfigError> {
    let file = match &flags.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    file.merge(flags.overrides()).resolve(workers_from_env()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        None => (Command::Run, cli.flags),
        Some(Sub::Simulate(f)) => (Command::Simulate, f),
        Some(Sub::DecayTimes(f)) => (Command::DecayTimes, f),
        Some(Sub::Clusters(f)) => (Command::Clusters, f),
        Some(Sub::Perturbed(f)) => (Command::Perturbed, f),
        Some(Sub::Verify(f)) => (Command::Verify, f),
        Some(Sub::Conservation(f)) => (Command::Conservation, f),
    };
    let config = match resolve(flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("equispin: {e}");
            if e.field == WORKERS_ENV {
                eprintln!("equispin: unset {WORKERS_ENV} or give it a positive integer");
            }
            return ExitCode::from(1);
        }
    };
    match execute(command, &config) {
        Ok(outcome) => {
            for line in &outcome.report {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("equispin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
