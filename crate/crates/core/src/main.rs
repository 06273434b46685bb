use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbohf::cli::{execute, OutputFormat, Overrides, RunConfig, ScanKind};

#[derive(Parser)]
#[command(name = "cbohf", version, about = "Cavity Born-Oppenheimer Hartree-Fock scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy along the photon displacement at fixed geometry.
    ScanQc(Common),
    /// Orientation scan of a single molecule.
    ScanAngle(Common),
    /// Bond-length scan of one molecule in an ensemble.
    ScanBond(Common),
    /// Ensemble-size sweep.
    SweepSize(Common),
    /// One-shot ensemble report.
    Single(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in basis name or basis file path.
    #[arg(long)]
    basis: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats (csv, json).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<OutputFormat>>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(kind: ScanKind, args: Common) -> cbohf::Result<i32> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| cbohf::Error::Config(format!("thread pool: {e}")))?;
    }
    let config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        kind: Some(kind),
        basis: args.basis,
        out: args.out,
        formats: args.format,
    };
    let outcome = execute(config, &overrides)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if outcome.flagged > 0 {
        eprintln!("{} row(s) flagged as not converged", outcome.flagged);
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::ScanQc(a) => (ScanKind::Qc, a),
        Command::ScanAngle(a) => (ScanKind::Angle, a),
        Command::ScanBond(a) => (ScanKind::Bond, a),
        Command::SweepSize(a) => (ScanKind::Size, a),
        Command::Single(a) => (ScanKind::Single, a),
    };
    match run(kind, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
