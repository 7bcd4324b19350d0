use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use eddm_cli::{execute, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "eddm", version, about = "Ensemble Robin-Robin domain decomposition for random Stokes-Darcy flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution errors and orders over a mesh sequence.
    Converge(Common),
    /// Manufactured problem with tiny conductivities plus the scaled channel.
    SmallK(Common),
    /// Monte Carlo study on the channel against a large reference ensemble.
    Mc(Common),
    /// Iteration counts of the manufactured ensemble for several Robin pairs.
    Sweep(Common),
    /// Fourier convergence factor over a grid of Robin pairs.
    Symbol(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file overriding scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed of the random field draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool> {
    let (scenario, common) = match cli.command {
        Command::Converge(c) => (Scenario::Manufactured, c),
        Command::SmallK(c) => (Scenario::SmallK, c),
        Command::Mc(c) => (Scenario::ChannelMc, c),
        Command::Sweep(c) => (Scenario::RobinSweep, c),
        Command::Symbol(c) => (Scenario::SymbolSweep, c),
    };
    let cfg = ScenarioConfig::load(scenario, common.config.as_deref(), common.seed)?;
    if let Some(n) = common.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let summary = execute(&cfg, &common.out)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    if !summary.converged {
        eprintln!("eddm: some runs did not converge");
    }
    Ok(summary.success(&cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("eddm: {e:#}");
            ExitCode::FAILURE
        }
    }
}
