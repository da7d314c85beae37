use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dtc_cli::commands::{cmd_invariants, cmd_spectrum, cmd_sweep2d, cmd_tauc_sweep, cmd_timeseries};
use dtc_cli::output::emit;
use dtc_cli::{parse_config_for, Format, Mode};

#[derive(Parser)]
#[command(name = "dtc", version, about = "Discrete time-crystal simulator for a dissipative dipolar spin pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (default: csv, json for `invariants`).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Stroboscopic observables per cycle.
    Timeseries(Common),
    /// Power spectrum of stroboscopic M_x and its crystalline fraction.
    Spectrum(Common),
    /// Crystalline fraction (or M_x per cycle) over a two-parameter grid.
    Sweep2d(Common),
    /// Spectra over a tau_c axis.
    TaucSweep(Common),
    /// CPTP, conservation, oracle and dissipativity checks; exit status 1 on failure.
    Invariants(Common),
}

fn run(cli: Cli) -> Result<bool> {
    let (mode, args) = match cli.command {
        Command::Timeseries(a) => (Mode::Timeseries, a),
        Command::Spectrum(a) => (Mode::Spectrum, a),
        Command::Sweep2d(a) => (Mode::Sweep2d, a),
        Command::TaucSweep(a) => (Mode::TaucSweep, a),
        Command::Invariants(a) => (Mode::Invariants, a),
    };
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut spec = parse_config_for(&text, Some(mode)).with_context(|| format!("in {}", args.config.display()))?;
    spec.format = match (args.format, mode) {
        (Some(FormatArg::Csv), _) => Format::Csv,
        (Some(FormatArg::Json), _) | (None, Mode::Invariants) => Format::Json,
        (None, _) => Format::Csv,
    };
    spec.output = args.out;

    let (body, pass) = match mode {
        Mode::Timeseries => (cmd_timeseries(&spec)?, true),
        Mode::Spectrum => (cmd_spectrum(&spec)?, true),
        Mode::Sweep2d => (cmd_sweep2d(&spec)?, true),
        Mode::TaucSweep => (cmd_tauc_sweep(&spec)?, true),
        Mode::Invariants => cmd_invariants(&spec)?,
    };
    emit(&body, spec.output.as_deref())?;
    Ok(pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
