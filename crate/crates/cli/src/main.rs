#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod checks;
mod commands;
mod plots;

/// Simulate, compare and check logic-based switching gain scenarios.
///
/// A scenario is either a built-in preset (`example1`, `example2-case1` …
/// `example2-case6`) or a path to a JSON scenario file.
#[derive(Parser)]
#[command(name = "lbsgain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSVs, metrics and a plot script.
    Run {
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Integration step in seconds.
        #[arg(long = "h", value_name = "STEP")]
        step: Option<f64>,
        /// Simulation horizon in seconds.
        #[arg(long = "T", value_name = "HORIZON")]
        horizon: Option<f64>,
    },
    /// Run several scenarios on the same plant and tabulate them.
    Compare {
        #[arg(num_args = 1..)]
        scenarios: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario against the design requirements.
    Validate { scenario: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(commands::EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let code = match cli.command {
        Command::Run { scenario, out, step, horizon } => commands::cmd_run(&scenario, &out, step, horizon),
        Command::Compare { scenarios, out } => commands::cmd_compare(&scenarios, &out),
        Command::Validate { scenario } => commands::cmd_validate(&scenario),
    };
    ExitCode::from(code)
}
