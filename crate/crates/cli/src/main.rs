//! `stopsum run <scenario> [out_dir]` and `stopsum selftest`.
//!
//! Exit status: 0 on success, 2 when a requested comparison fails, 1 on
//! any error. Flags override the matching scenario fields; `--out`
//! overrides the positional output directory.

mod error;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stopsum::acceptance::{render, run_all, AcceptanceConfig};

use crate::error::CliError;
use crate::run::Format;
use crate::scenario::{Overrides, Scenario};

#[derive(Parser)]
#[command(name = "stopsum", version, about = "Random sums stopped at the first success")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file and write its artifacts.
    Run {
        scenario: PathBuf,
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "t-max")]
        t_max: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the acceptance suite at reduced sample sizes.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// replications per simulation check
        #[arg(long)]
        n: Option<usize>,
    },
}

fn run_command(
    path: PathBuf,
    out_dir: PathBuf,
    overrides: Overrides,
    format: Format,
) -> Result<Option<bool>, CliError> {
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let mut scenario = Scenario::from_json(&text)?;
    scenario.apply(&overrides)?;
    let outcome = run::run(&scenario, &out_dir, format)?;
    for p in &outcome.written {
        println!("wrote {}", p.display());
    }
    Ok(outcome.comparison_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out_dir, seed, n, t_max, h, out, format } => {
            let dir = out.or(out_dir).unwrap_or_else(|| PathBuf::from("out"));
            match run_command(scenario, dir, Overrides { seed, n, t_max, h }, format) {
                Ok(Some(false)) => {
                    eprintln!("comparison FAIL (see comparison.json)");
                    ExitCode::from(2)
                }
                Ok(Some(true)) => {
                    println!("comparison PASS");
                    ExitCode::SUCCESS
                }
                Ok(None) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Selftest { seed, n } => {
            let mut cfg = AcceptanceConfig::reduced(seed);
            if let Some(n) = n {
                cfg = AcceptanceConfig { n, n_large: n, n_limit: n, ..cfg };
            }
            let results = run_all(&cfg);
            print!("{}", render(&results));
            if results.iter().all(|r| r.pass()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
