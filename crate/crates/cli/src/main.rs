//! `ranker`: command-line front end of `ranker-core`.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::run_train(a),
        Command::Evaluate(a) => commands::run_evaluate(a),
        Command::Rank(a) => commands::run_rank(a),
        Command::Synth(a) => commands::run_synth(a),
        Command::Sweep(a) => commands::run_sweep(a),
        Command::Gridsearch(a) => commands::run_gridsearch(a),
        Command::Peaks(a) => commands::run_peaks(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
