use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcrb_cli::config::{Experiment, ExperimentConfig};
use qcrb_cli::error::{CliError, CliResult};
use qcrb_cli::experiments;

/// Interferometric phase-estimation experiment runner.
///
/// Each subcommand reproduces one experiment family from a declarative TOML
/// configuration (all have complete defaults) and writes deterministic CSV,
/// optionally mirrored as JSON.
#[derive(Parser)]
#[command(name = "qcrb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; defaults to <experiment>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON mirror next to the CSV.
    #[arg(long)]
    json: bool,
    /// Worker threads for the sweep cells; defaults to the rayon heuristic.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimality classification of the three counting measurements.
    Table1(RunArgs),
    /// Quantum/classical Fisher information over a phase grid.
    FisherScan(RunArgs),
    /// Normalized sensitivity vs phase for noisy population-difference readout.
    NoiseScan(RunArgs),
    /// Sensitivity gain vs particle number at theta = pi/2N.
    GainVsN(RunArgs),
    /// Monte-Carlo Bayesian estimation sequences vs the information bound.
    BayesSim(RunArgs),
    /// Husimi sphere maps along the interferometric sequence.
    Husimi(RunArgs),
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Table1(args) => (Experiment::Table1, args),
            Command::FisherScan(args) => (Experiment::FisherScan, args),
            Command::NoiseScan(args) => (Experiment::NoiseScan, args),
            Command::GainVsN(args) => (Experiment::GainVsN, args),
            Command::BayesSim(args) => (Experiment::BayesSim, args),
            Command::Husimi(args) => (Experiment::Husimi, args),
        }
    }
}

fn execute(experiment: Experiment, args: RunArgs) -> CliResult<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(experiment),
    };
    // flags win over the file
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    let run = || experiments::run(experiment, &config);
    let document = match args.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|err| CliError::Config(format!("worker pool: {err}")))?;
            pool.install(run)?
        }
        None => run()?,
    };
    if let Some(table) = &document.table {
        print!("{table}");
    }
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.name())));
    document.write_csv(&out)?;
    println!("wrote {} rows to {}", document.rows.len(), out.display());
    if args.json {
        let json_path = out.with_extension("json");
        document.write_json(&json_path)?;
        println!("wrote JSON mirror to {}", json_path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
