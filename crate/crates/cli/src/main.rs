//! `hirota-rh`: generate, verify, and scatter Hirota N-solitons from the command line.
//!
//! Exit codes: 0 success, 2 spec/usage, 3 I/O, 4 verification, 5 scattering,
//! 6 round trip.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Failure, Format, Overrides, Sweep};
use hirota_rh::GridSpec;

#[derive(Parser)]
#[command(name = "hirota-rh", version, about = "Riemann-Hilbert N-solitons of the Hirota equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the N-soliton on a grid and export it.
    Generate(RunArgs),
    /// Run the PDE and zero-curvature residual engines under grid refinement.
    Verify(RunArgs),
    /// Real-lambda scattering sweep with identity checks.
    Scatter(RunArgs),
    /// Recover the discrete spectrum from the generated potential.
    Roundtrip(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Spec (or Gaussian potential) JSON document.
    #[arg(long)]
    spec: PathBuf,
    /// Output file; sidecars are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// x0:x1:nx,t0:t1:nt
    #[arg(long, value_parser = config::parse_grid, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    /// lmin:lmax:count
    #[arg(long, value_parser = config::parse_sweep, allow_hyphen_values = true)]
    sweep: Option<Sweep>,
    /// Number of grid levels (each halves both spacings).
    #[arg(long)]
    levels: Option<u32>,
    /// Relative amplitude of deterministic noise added to the samples.
    #[arg(long)]
    perturb: Option<f64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("HIROTA_RH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::Spec(format!("HIROTA_RH_THREADS=`{v}` is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Spec(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let (name, args) = match cli.command {
        Command::Generate(a) => ("generate", a),
        Command::Verify(a) => ("verify", a),
        Command::Scatter(a) => ("scatter", a),
        Command::Roundtrip(a) => ("roundtrip", a),
    };
    let loaded = config::load_input(&args.spec)?;
    let flags = Overrides {
        format: args.format,
        grid: args.grid,
        sweep: args.sweep,
        levels: args.levels,
        perturb: args.perturb,
    };
    let cfg = config::resolve(args.spec, args.out, args.force, flags, &loaded.run)?;
    match name {
        "generate" => commands::generate(&cfg, &loaded),
        "verify" => commands::verify(&cfg, &loaded),
        "scatter" => commands::scatter(&cfg, &loaded),
        _ => commands::roundtrip(&cfg, &loaded),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hirota-rh: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
