use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qam::{Mode, RunConfig, RunError};

/// Dynamical tunneling out of quantum accelerator modes.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase portrait of the pseudo-classical map plus island area.
    Portrait(Args),
    /// Island area and occupancy grid.
    Area(Args),
    /// Evolve an ensemble, track the mode and fit its decay.
    Evolve(Args),
    /// Decay rates over a parameter family and the scaling fit.
    Sweep(Args),
    /// Refit a survival or rates table.
    Fit(Args),
    /// Laboratory units to dimensionless parameters.
    ConvertUnits(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Histogram output stride (overrides the config).
    #[arg(long)]
    stride: Option<u64>,
    /// 10^4 rotors and 5x10^4 kicks.
    #[arg(long)]
    paper_scale: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn execute(mode: Mode, args: Args) -> Result<(), RunError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(stride) = args.stride {
        cfg.stride = stride;
    }
    if args.paper_scale {
        cfg.paper_scale();
    }
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = qam::run::run_with_workers(&cfg, mode, &out, args.workers)?;
    for f in files {
        println!("{}", out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Portrait(a) => (Mode::Portrait, a),
        Command::Area(a) => (Mode::Area, a),
        Command::Evolve(a) => (Mode::Evolve, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Fit(a) => (Mode::Fit, a),
        Command::ConvertUnits(a) => (Mode::ConvertUnits, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
