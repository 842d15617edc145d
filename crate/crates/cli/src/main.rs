mod error;
mod experiment;
mod generate;
mod output;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::{config, CliResult};

#[derive(Parser)]
#[command(name = "sgkit", version, about = "Security-game generation, solving and experiments")]
struct Cli {
    /// Seed for synthetic data and randomized baselines.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write wall-clock fields as zero so reruns produce identical files.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Nfg,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build a game from a generation config and write it as JSON.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a stored game.
    Solve {
        game: PathBuf,
        #[arg(long, value_enum)]
        solver: solve::SolverName,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Support bound for `sparse_milp`.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        /// Wall-clock cap for the regret-matching solvers, in seconds.
        #[arg(long)]
        runtime_cap: Option<f64>,
        #[arg(long, default_value_t = 5)]
        sample_interval: usize,
        /// Double-oracle stopping tolerance.
        #[arg(long, default_value_t = sgkit::solvers::zero_sum::DO_EPSILON)]
        eps: f64,
    },
    /// Run an experiment and write its tables into `--out`.
    Experiment {
        #[arg(value_enum)]
        kind: experiment::Kind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a stored game's payoff matrices in Gambit `.nfg` form.
    ExportNfg {
        game: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SGKIT_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| config(format!("SGKIT_THREADS={v:?} is not a thread count")))?;
    if n == 0 {
        return Err(config("SGKIT_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    let timing = !cli.no_timing;
    match cli.command {
        Command::Generate { config, out } => generate::run(&config, &out, cli.seed),
        Command::Solve { game, solver, format, out, k, iterations, runtime_cap, sample_interval, eps } => {
            let opts = solve::Options { k, iterations, runtime_cap, sample_interval, eps, timing };
            solve::run(&game, solver, format, out.as_deref(), &opts)
        }
        Command::Experiment { kind, config, out } => experiment::run(kind, &config, &out, cli.seed, timing),
        Command::ExportNfg { game, out, title } => solve::export_nfg(&game, out.as_deref(), title),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
