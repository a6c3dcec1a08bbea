//! `epialign`: filter tweets, build daily features, fit and evaluate the
//! regressor, and tabulate results. Exit codes: 0 success, 2 usage or
//! format error, 3 degenerate data.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    EvalArgs, FeaturizeArgs, FilterArgs, PredictArgs, ReportArgs, SynthArgs, TrainArgs, TransferArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "epialign",
    version,
    about = "Align social-media activity with epidemic case counts"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to one per core. Outputs do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the filter chain over a tweet JSONL file.
    Filter(FilterArgs),
    /// Build the per-day feature table.
    Featurize(FeaturizeArgs),
    /// Fit the regressor on one country's training window.
    Train(TrainArgs),
    /// Apply a saved model to a feature table.
    Predict(PredictArgs),
    /// Spearman correlation between two dated CSV files.
    Eval(EvalArgs),
    /// Train on a source country and score on a target country.
    Transfer(TransferArgs),
    /// Tabulate a directory of results.
    Report(ReportArgs),
    /// Write a seeded two-country synthetic corpus.
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
