//! `backflow`: batch analyses of a two-stage polarization-dephasing
//! process. Commands load a JSON run configuration, compute, and write
//! CSV/JSON artifacts plus a hashed manifest into the output directory.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data (exit code 1).
    Config(String),
    /// A computation failed (exit code 2).
    Compute(String),
    /// Filesystem failure (exit code 3).
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "config error: {msg}"),
            Self::Compute(msg) => write!(f, "computation error: {msg}"),
            Self::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Compute(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "backflow",
    version,
    about = "Dephasing-process analyses: trace-distance dynamics, delay/angle sweeps, \
             the BLP non-Markovianity measure, and coherence-time fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run-configuration JSON; built-in defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed override
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input CSV with columns x0_mm,D_tf (or lambda_nm,intensity with
    /// --spectrum)
    data: PathBuf,
    /// Fit a wavelength-domain spectrum instead of the delay curve
    #[arg(long)]
    spectrum: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Export D(t), sigma(t), |kappa(t)|, and gamma(t) for the configured
    /// state pair
    Trajectory(CommonArgs),
    /// Sweep the delay length x0: delta_D and D_tf per point
    SweepDelay(CommonArgs),
    /// Sweep initial-state angle pairs: the delta_D surface and its argmax
    SweepAngles(CommonArgs),
    /// Maximize the total trace-distance backflow over state pairs
    Measure(CommonArgs),
    /// Fit the coherence time 1/delta_omega from a CSV data file
    Fit(FitArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Self::Trajectory(c)
            | Self::SweepDelay(c)
            | Self::SweepAngles(c)
            | Self::Measure(c) => c,
            Self::Fit(f) => &f.common,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let mut config = RunConfig::load(common.config.as_deref())?;
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out_dir = config.output_dir.clone();
    match &cli.command {
        Command::Trajectory(_) => commands::cmd_trajectory(&config, &out_dir),
        Command::SweepDelay(_) => commands::cmd_sweep_delay(&config, &out_dir),
        Command::SweepAngles(_) => commands::cmd_sweep_angles(&config, &out_dir),
        Command::Measure(_) => commands::cmd_measure(&config, &out_dir),
        Command::Fit(args) => commands::cmd_fit(&config, &out_dir, &args.data, args.spectrum),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("backflow: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
