use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use greed_core::Execution;

mod commands;
mod config;
mod error;

use config::{Overrides, RunConfig};
use error::Result;

/// Bandit simulations and regret bounds under a known reward multiplier.
#[derive(Debug, Parser)]
#[command(name = "greed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch of games and write curves, a final summary and a manifest.
    Simulate(RunArgs),
    /// Evaluate the regret bounds of the configured policies.
    Bounds {
        #[command(flatten)]
        run: RunArgs,
        /// Also simulate the policies and compare mean regret with each bound.
        #[arg(long)]
        compare: bool,
    },
    /// Run the wave/christmas/step × normal/bernoulli grid with all six policies.
    ReproducePaper(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of arms.
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Comma-separated policy kinds.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<String>>,
    /// wave, christmas, step, constant:<value> or csv:<path>.
    #[arg(long)]
    greed: Option<String>,
    /// normal or bernoulli.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// Use 500 arms and 2000 rounds.
    #[arg(long)]
    full: bool,
    /// Run trials on one thread (outputs are identical either way).
    #[arg(long)]
    serial: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            arms: self.arms,
            rounds: self.rounds,
            policies: self.policy.clone(),
            greed: self.greed.clone(),
            dist: self.dist.clone(),
            threshold: self.threshold,
            k: self.k,
            full: self.full,
        }
    }

    fn execution(&self) -> Execution {
        if self.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }

    fn load(&self) -> Result<(RunConfig, Overrides)> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let overrides = self.overrides();
        config.apply(&overrides)?;
        Ok((config, overrides))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let (config, _) = args.load()?;
            commands::simulate(config, &args.out, args.execution())
        }
        Command::Bounds { run, compare } => {
            let (config, _) = run.load()?;
            commands::bounds(config, &run.out, compare, run.execution())
        }
        Command::ReproducePaper(args) => {
            let (config, overrides) = args.load()?;
            commands::reproduce_paper(config, &overrides, &args.out, args.execution())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
