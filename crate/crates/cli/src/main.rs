//! `nvm`: experiments on the noisy voter model.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "nvm", version, about = "Noisy voter model experiments")]
struct Cli {
    /// JSON run configuration (a previous summary.json also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral autocorrelation curve and predicted mixing time.
    Autocorr,
    /// Mixing-time coefficients of lattice patterns over a theta grid.
    TmixTable,
    /// Exact total-variation distance to stationarity over time.
    TvProfile,
    /// Run the built-in invariant checks.
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: verify::Suite,
        /// Perturb one eigenvalue by 1e-3 to check that the harness notices.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Dump forward, backward, CFTP or coupled samples.
    Sample,
}

enum Failure {
    Verification,
    Usage(anyhow::Error),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use noisy_voter::Error as E;
    let capped = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<E>(),
            Some(
                E::StateSpaceTooLarge { .. }
                    | E::EventCap(_)
                    | E::EpochCap(_)
                    | E::TooLarge(_)
                    | E::NoConvergence(_)
                    | E::EigenNoConvergence(_)
            )
        )
    });
    if capped { 3 } else { 2 }
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli).map_err(Failure::Usage)?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    let result = match &cli.command {
        Command::Autocorr => commands::autocorr(&cfg),
        Command::TmixTable => commands::tmix_table(&cfg),
        Command::TvProfile => commands::tv_profile(&cfg),
        Command::Sample => commands::sample(&cfg),
        Command::Verify { suite, inject_fault } => {
            return match verify::run(*suite, *inject_fault) {
                Ok(true) => Ok(()),
                Ok(false) => Err(Failure::Verification),
                Err(e) => Err(Failure::Usage(e)),
            };
        }
    };
    result.map_err(Failure::Usage)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
