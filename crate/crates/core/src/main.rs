use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sigmaevo::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use sigmaevo::Error;

#[derive(Parser)]
#[command(name = "sigmaevo", version, about = "Sigma-evolution system experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment description (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Decay fits of the linear equations.
    LinearDecay,
    /// Small-data coupled run against the global-existence rates.
    NonlinearDecay,
    /// Lifespan sweep over the configured data sizes.
    Lifespan,
    /// Verdict map of the exponent plane.
    RegionMap,
    /// Test-function functionals and keystone inequalities.
    Testfn,
    /// Raw trajectory dump.
    Simulate,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::LinearDecay => Self::LinearDecay,
            Command::NonlinearDecay => Self::NonlinearDecay,
            Command::Lifespan => Self::Lifespan,
            Command::RegionMap => Self::RegionMap,
            Command::Testfn => Self::Testfn,
            Command::Simulate => Self::Simulate,
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::Inadmissible(_) | Error::DomainTooSmall(_)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let mut config = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if let Some(k) = cli.workers {
        config.workers = Some(k);
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match run_experiment(cli.command.into(), &config) {
        Ok(outcome) => {
            for g in &outcome.gates {
                println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
            }
            for n in &outcome.notes {
                println!("note: {n}");
            }
            println!("outputs in {}", config.output_dir.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
