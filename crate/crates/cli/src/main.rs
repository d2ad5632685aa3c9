//! Experiment runner for the one-time-memory construction.
//!
//! One subcommand per claim family; all outputs are deterministic
//! functions of the configuration (the timing sidecar excepted). Exit
//! codes: 0 pass, 2 claim-check failure, 3 I/O or configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigOverrides, ExperimentConfig};

#[derive(Parser)]
#[command(name = "otmsim", version, about = "One-time-memory experiment runner")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for the parallel stages (default: all cores).
    /// Results are independent of this setting.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated list of protocol sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,

    #[arg(long, global = true)]
    restarts: Option<u64>,

    #[arg(long, global = true)]
    generations_max: Option<u64>,

    #[arg(long, global = true)]
    grid_step: Option<f64>,

    #[arg(long, global = true)]
    trials: Option<u64>,

    #[arg(long, global = true)]
    constraint_threshold: Option<f64>,

    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the decoding probabilities of the fixed random access code.
    QracCheck,
    /// Run both disturbance solvers and compare their optima.
    Optimize,
    /// Grid-certify the disturbance bound and sweep the claim on random POVMs.
    Certify,
    /// Honest-read success: exact tails versus Monte Carlo.
    Correctness,
    /// Attack experiments: proof constants, unlock tails, simulator runs.
    Adversary,
    /// Verify the supermartingale tail bound against adaptive processes.
    Tails,
    /// Aggregate prior outputs into a run manifest.
    Report,
}

fn build_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let base = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = ConfigOverrides {
        seed: cli.seed,
        n_values: cli.n_values.clone(),
        restarts: cli.restarts,
        generations_max: cli.generations_max,
        grid_step: cli.grid_step,
        trials: cli.trials,
        constraint_threshold: cli.constraint_threshold,
        output_dir: cli.output_dir.clone(),
    };
    let config = base.apply(&overrides);
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(3);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: building thread pool: {e}");
            return ExitCode::from(3);
        }
    }

    let config = match build_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(3);
        }
    };

    let outcome = match cli.command {
        Command::QracCheck => commands::cmd_qrac_check(&config),
        Command::Optimize => commands::cmd_optimize(&config),
        Command::Certify => commands::cmd_certify(&config),
        Command::Correctness => commands::cmd_correctness(&config),
        Command::Adversary => commands::cmd_adversary(&config),
        Command::Tails => commands::cmd_tails(&config),
        Command::Report => {
            return match commands::cmd_report(&config) {
                Ok(commands::ReportOutcome::AllPassed) => ExitCode::SUCCESS,
                Ok(commands::ReportOutcome::SomeFailed) => ExitCode::from(2),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(3)
                }
            };
        }
    };

    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
