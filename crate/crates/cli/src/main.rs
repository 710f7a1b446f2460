use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jkolip_cli::{describe_text, list_text, run_file, RunError, RunOptions};

#[derive(Parser)]
#[command(
    name = "jkolip",
    version,
    about = "Run JKO contraction experiments from JSON configs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Worker threads for parallel sweeps.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the experiment kinds.
    ListExperiments,
    /// Print the schema and defaults of one experiment kind.
    Describe { kind: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::ListExperiments => {
            print!("{}", list_text());
            ExitCode::SUCCESS
        }
        Command::Describe { kind } => match describe_text(&kind) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run {
            config,
            jobs,
            out,
            seed,
        } => {
            let opts = RunOptions { out, seed, jobs };
            match run_file(&config, &opts) {
                Ok(outcome) => {
                    print!("{}", outcome.report.checks_text());
                    for w in &outcome.report.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("artifacts: {}", outcome.dir.display());
                    if outcome.report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e @ RunError::Config(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
                Err(e @ RunError::Aborted { .. }) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
