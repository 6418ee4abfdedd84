use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use revcalc_cli::catalog::{catalog, render_text};
use revcalc_cli::scenario::validated;
use revcalc_cli::{run_file, CliError, Overrides};
use revcalc_core::model::{parse_model, ModelError};

#[derive(Parser)]
#[command(
    name = "revcalc",
    version,
    about = "Run time-reversal calculus checks on Markov chain scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write report.csv / report.json.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Output directory for the report files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List built-in models and functions.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Check a model file for detailed balance and well-formedness.
    Validate { model: PathBuf },
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            paths,
            horizon,
            out,
            threads,
        } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Parse(format!("thread pool: {e}")))?;
            let outcome = pool.install(|| {
                run_file(
                    &scenario,
                    Overrides {
                        seed,
                        paths,
                        horizon,
                    },
                )
            })?;
            for (p, d) in &outcome.timings {
                eprintln!("{p}: {:.3}s", d.as_secs_f64());
            }
            outcome.report.write(&out)?;
            print!("{}", outcome.report.to_csv());
            Ok(if outcome.report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Catalog { json } => {
            let c = catalog();
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&c).expect("catalog serializes")
                );
            } else {
                print!("{}", render_text(&c));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { model } => {
            let text = std::fs::read_to_string(&model).map_err(|source| CliError::Io {
                path: model.clone(),
                source,
            })?;
            let parsed = parse_model(&text).map_err(|e| match e {
                ModelError::Parse(m) => CliError::Parse(m),
                other => CliError::InvalidModel(other.to_string()),
            })?;
            validated(parsed)?;
            println!("{}: valid", model.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
