use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gbnlearn::commands::{self, LearnOverrides};
use gbnlearn::sweep::THREADS_ENV;

/// Learn equal-variance Gaussian Bayesian networks and run recovery experiments.
#[derive(Debug, Parser)]
#[command(name = "gbnlearn", version, after_help = concat!(
    "Exit codes: 0 success, 2 invalid input, 3 runtime or numerical failure.\n",
    "Set GBNLEARN_THREADS to control worker threads."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random network and samples; writes <out>.model and <out>.csv.
    Generate {
        /// JSON generator config.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path prefix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a network from a headerless CSV data file.
    Learn {
        /// Data file, one sample per row.
        #[arg(long)]
        data: PathBuf,
        /// Optional JSON learner config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CLIME regularization (default: 0.5 k sqrt(ln p / n)).
        #[arg(long)]
        lambda: Option<f64>,
        /// Support threshold (default: max(1e-8, 3 lambda)).
        #[arg(long)]
        threshold: Option<f64>,
        /// Mean-center the data first.
        #[arg(long)]
        center: bool,
        /// Recompute every ratio after each removal.
        #[arg(long)]
        strict_recompute: bool,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a learned model file against the true one; prints JSON.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        learned: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded experiment grid; writes CSVs into the output directory.
    Sweep {
        /// JSON experiment spec.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the experiment's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> gbnlearn::Result<()> {
    match cli.command {
        Command::Generate { config, seed, out } => {
            let (data, model) = commands::generate(&config, seed, &out)?;
            eprintln!("wrote {} and {}", model.display(), data.display());
        }
        Command::Learn {
            data,
            config,
            lambda,
            threshold,
            center,
            strict_recompute,
            out,
        } => {
            let overrides = LearnOverrides {
                lambda,
                threshold,
                center,
                strict_recompute,
            };
            let cfg = commands::learner_config(config.as_deref(), &overrides)?;
            let learned = commands::learn(&data, &cfg, &out)?;
            eprintln!(
                "learned {} edges over {} nodes (lambda = {:e}); wrote {}",
                learned.edges.len(),
                learned.p(),
                learned.lambda,
                out.display()
            );
        }
        Command::Eval { truth, learned, out } => {
            print!("{}", commands::eval(&truth, &learned, out.as_deref())?);
        }
        Command::Sweep { config, seed, out } => {
            let result = commands::run_sweep(&config, seed, &out)?;
            let failed = result
                .trials
                .iter()
                .chain(&result.gamma_trials)
                .filter(|r| !r.error.is_empty())
                .count();
            eprintln!(
                "{} trials ({} gamma), {failed} failed; wrote {} ({THREADS_ENV} controls parallelism)",
                result.trials.len(),
                result.gamma_trials.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
