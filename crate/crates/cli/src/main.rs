#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

/// Simulation laboratory for planar multirotors with tilting propellers.
#[derive(Parser, Debug)]
#[command(name = "omav", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario configuration (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "omav-out")]
    pub out: PathBuf,
    /// Vehicle preset (main-paper, report-nominal, type1-n3); overrides the config.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Random seed recorded in every output.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of samples (worst-case search, oracle validation).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Integration step (s).
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Simulated duration (s).
    #[arg(long = "t-final", global = true)]
    pub t_final: Option<f64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Regulate to a constant pose.
    Regulate {
        /// Target x (m).
        #[arg(long, requires_all = ["y", "phi"])]
        x: Option<f64>,
        /// Target y (m).
        #[arg(long)]
        y: Option<f64>,
        /// Target attitude (deg).
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
    },
    /// Track a circle, optionally with a sinusoidal attitude reference.
    Track {
        /// Add φ_d = 80° sin(30°/s · t).
        #[arg(long)]
        sinusoid: bool,
    },
    /// Ranks, omnidirectionality and zero dynamics at an equilibrium.
    Analyze {
        /// Equilibrium x (m).
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Equilibrium y (m).
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Equilibrium attitude (deg).
        #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
        phi: f64,
        /// Number of force directions tested for omnidirectionality.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Duration of zero-dynamics trajectories (s).
        #[arg(long, default_value_t = 5.0)]
        zd_time: f64,
    },
    /// Compare the closed-form model with the independent oracle.
    Validate,
    /// Largest single-parameter perturbations that keep tracking alive.
    ParamRange {
        /// Parameter name (a, c, m_p, m_b, b2, I_p, I_b) or "all".
        #[arg(long, default_value = "all")]
        param: String,
        #[arg(long, value_enum, default_value_t = DirArg::Both)]
        direction: DirArg,
        /// Bisection resolution on Δ.
        #[arg(long, default_value_t = 1e-2)]
        resolution: f64,
    },
    /// Monte-Carlo search for the worst combined perturbation.
    WorstCase {
        #[arg(long, value_enum, default_value_t = SamplerArg::Uniform)]
        sampler: SamplerArg,
        /// Levels per parameter for the lattice sampler.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Skip the 14 single-parameter extremes.
        #[arg(long)]
        no_extremes: bool,
    },
    /// Disturbance tolerance and response across frequencies.
    DisturbanceSweep {
        /// Comma-separated angular frequencies (rad/s).
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,1,10")]
        omegas: Vec<f64>,
        /// Bisection resolution on the amplitude (m/s²).
        #[arg(long, default_value_t = 1e-2)]
        resolution: f64,
        /// Response amplitude as a fraction of A_max at the first frequency.
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirArg {
    Up,
    Down,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerArg {
    Uniform,
    Lattice,
}

fn report(err: &CliError) {
    let body = serde_json::json!({
        "error": { "kind": err.kind(), "message": err.to_string() }
    });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            report(&err);
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
