use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delaylab::cli::{parse_partial, run_experiment, ExperimentConfig, ExperimentId};

#[derive(Parser)]
#[command(name = "delaylab", version, about = "Delay-embedding predictability and dimension experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV files and summary.
    Run {
        /// E1..E6, or the full name such as E4_counterexample.
        #[arg(long)]
        experiment: Option<ExperimentId>,
        #[arg(long)]
        seed: Option<u64>,
        /// Flat `key = value` file; command-line values take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the experiments.
    List,
}

fn main() -> ExitCode {
    match Args::parse().command {
        Command::List => {
            for e in ExperimentId::ALL {
                println!("{:<22} {}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { experiment, seed, config, out } => {
            let partial = match config.map(std::fs::read_to_string).transpose() {
                Ok(text) => match parse_partial(text.as_deref().unwrap_or("")) {
                    Ok(p) => p,
                    Err(e) => {
                        eprintln!("error: config: {e}");
                        return ExitCode::from(2);
                    }
                },
                Err(e) => {
                    eprintln!("error: cannot read config: {e}");
                    return ExitCode::from(2);
                }
            };
            let Some(experiment) = experiment.or(partial.experiment) else {
                eprintln!("error: experiment missing");
                return ExitCode::from(2);
            };
            let cfg = ExperimentConfig {
                experiment,
                seed: seed.or(partial.seed).unwrap_or(0),
                overrides: partial.overrides,
            };
            match run_experiment(&cfg, &out) {
                Ok(summary) => {
                    print!("{}", summary.to_text());
                    if summary.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
