//! Command-line interface for the neutral-atom noise toolbox: simulation,
//! dataset generation, model training, and correction-pulse learning.

use clap::{Parser, Subcommand};

mod commands;
mod util;

use commands::gendata::GenDataArgs;
use commands::learncmd::{CrossValidateArgs, PredictArgs, SearchArgs, TrainArgs};
use commands::report::ReportArgs;
use commands::rl::RlTrainArgs;
use commands::simulate::SimulateArgs;

#[derive(Parser)]
#[command(
    name = "rydnoise",
    version,
    about = "Noisy neutral-atom simulation, noise regression, and pulse correction"
)]
struct Cli {
    /// Worker threads for shot/fold parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate occupation probabilities of a noisy run.
    Simulate(SimulateArgs),
    /// Generate labeled datasets (single- or multi-parameter).
    GenData(GenDataArgs),
    /// Train one regressor on a dataset.
    Train(TrainArgs),
    /// k-fold cross-validation producing per-fold MAE and fold models.
    CrossValidate(CrossValidateArgs),
    /// Random hyperparameter search with successive halving.
    Search(SearchArgs),
    /// Ensemble prediction (mean ± std) from trained models.
    Predict(PredictArgs),
    /// Train the correction-pulse DQN agent.
    RlTrain(RlTrainArgs),
    /// Plot-ready CSV series and summaries from CV reports and KL logs.
    Report(ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        // Ignore the error when a pool is already installed (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::GenData(args) => commands::gendata::run(args),
        Command::Train(args) => commands::learncmd::run_train(args),
        Command::CrossValidate(args) => commands::learncmd::run_cv(args),
        Command::Search(args) => commands::learncmd::run_search(args),
        Command::Predict(args) => commands::learncmd::run_predict(args),
        Command::RlTrain(args) => commands::rl::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    if let Err(e) = result {
        let code = e
            .downcast_ref::<rydnoise::CoreError>()
            .map(|c| c.code())
            .unwrap_or("cli");
        // Single-line, machine-parsable failure report.
        eprintln!("error[{code}]: {e:#}");
        std::process::exit(2);
    }
}
