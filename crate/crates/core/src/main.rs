use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use topocyl::problem::parse_file;
use topocyl::runner::{exit_code, render_human, render_json, run, RunOptions};

/// Checks problem files over finite-base topological cylinder algebras.
#[derive(Debug, Parser)]
#[command(name = "topocyl", version)]
struct Cli {
    /// Problem file.
    file: PathBuf,

    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Step count for every command that takes one.
    #[arg(long)]
    steps: Option<usize>,

    /// Support cap of the base space.
    #[arg(long)]
    support_cap: Option<usize>,

    /// Print one JSON document per command instead of the table.
    #[arg(long)]
    json: bool,

    /// Include the step-by-step chain trace.
    #[arg(long)]
    trace: bool,

    /// Show per-command wall-clock time in the human report.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let problem = match parse_file(&cli.file, cli.support_cap) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}: {e}", cli.file.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed: cli.seed,
        steps: cli.steps,
        trace: cli.trace,
    };
    let reports = run(&problem, &opts);
    if cli.json {
        print!("{}", render_json(&reports));
    } else {
        print!("{}", render_human(&reports, cli.timing));
    }
    ExitCode::from(exit_code(&reports) as u8)
}
