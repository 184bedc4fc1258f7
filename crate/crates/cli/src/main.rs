mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "wedge-walk", version, about = "Reflecting random walks in curvilinear wedges")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (schema_version 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads. Affects speed only.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Threshold β_c over α, s₀ and the extrema of β_c; writes phase.json.
    Phase,
    /// Passage-time ensemble; writes passages.csv, survival.csv and summary.json.
    Simulate,
    /// Empirical against predicted Lyapunov drift; writes drift.csv.
    DriftCheck,
    /// Verdict per (α, β⁺, β⁻) cell; writes sweep.csv.
    Sweep,
    /// Moment audit of the configured model; writes audit.json.
    Audit,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| config::ConfigError {
        path: "$".into(),
        message: "--config <path> is required".into(),
    })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config(config::ConfigError {
                path: "--threads".into(),
                message: "must be at least 1".into(),
            }));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.into()))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Phase => commands::phase(&cfg, &cli.out),
        Command::Simulate => commands::simulate(&cfg, &cli.out),
        Command::DriftCheck => commands::drift_check(&cfg, &cli.out),
        Command::Sweep => commands::sweep(&cfg, &cli.out),
        Command::Audit => commands::audit(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
