use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skewevt::config::validate_config;
use skewevt::run::{list_systems, run_experiment, Overrides, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "skewevt", about = "Extreme value laws for skew-product systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List every constraint violation in a config file.
    Validate { config: PathBuf },
    /// Show the available system kinds.
    ListSystems,
    Version,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            threads,
            out_dir,
        } => {
            let overrides = Overrides {
                seed,
                out_dir,
                threads,
            };
            match run_experiment(&config, &overrides) {
                Ok(out) => {
                    let line = serde_json::json!({
                        "csv": out.csv_path,
                        "json": out.json_path,
                        "verdict": out.summary["verdict"],
                        "warnings": out.summary["warnings"],
                    });
                    println!("{line}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", e.record());
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Validate { config } => {
            let report = validate_config(&config);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            if report.valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::ListSystems => {
            for (kind, about) in list_systems() {
                println!("{kind:<18} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!(
                "skewevt {} (schema {SCHEMA_VERSION})",
                env!("CARGO_PKG_VERSION")
            );
            ExitCode::SUCCESS
        }
    }
}
