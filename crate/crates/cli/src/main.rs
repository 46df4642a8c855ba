use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod check;
mod commands;

#[derive(Parser)]
#[command(name = "fragdeconv", version, about = "Division-kernel estimation for size-structured cell populations")]
struct Cli {
    /// Worker threads for campaigns and bandwidth grids (default: all cores).
    #[arg(long, global = true, env = "FRAGDECONV_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct ConfigArg {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the branching population and write the cell sizes.
    Simulate(commands::SimulateArgs),
    /// Solve for the stationary density and its spectra.
    Stationary(commands::StationaryArgs),
    /// Estimate g and h at a fixed bandwidth from a size sample.
    Estimate(commands::EstimateArgs),
    /// Select a bandwidth with crit1, crit2 or the oracle.
    Select(commands::SelectArgs),
    /// Run a Monte Carlo risk campaign.
    Bench(commands::BenchArgs),
    /// Run the invariant checks and print a pass/fail table.
    Check(check::CheckArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Stationary(a) => commands::stationary(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Select(a) => commands::select(a),
        Command::Bench(a) => commands::bench(a),
        Command::Check(a) => check::run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
