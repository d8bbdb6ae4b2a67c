//! Command-line front end: run experimental conditions, aggregate reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scalesentry::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "scalesentry",
    version,
    about = "Deterministic attack-aware autoscaling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one condition for a number of repetitions.
    Run {
        /// Condition id, 1..6.
        #[arg(long)]
        condition: u8,
        #[arg(long, default_value_t = 3)]
        reps: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory for run artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Field override, repeatable: --override key=value.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Aggregate completed runs into results.csv and summary.csv.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run conditions 1 through 6, then report.
    All {
        #[arg(long, default_value_t = 3)]
        reps: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn parse_overrides(raw: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    raw.iter()
        .map(|item| {
            item.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| anyhow::anyhow!("override {item:?} is not of the form key=value"))
        })
        .collect()
}

fn config(
    condition: u8,
    reps: u32,
    seed: u64,
    out: &Path,
    overrides: Vec<(String, String)>,
) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(condition, out);
    config.repetitions = reps;
    config.master_seed = seed;
    config.overrides = overrides;
    config
}

fn run_condition(
    condition: u8,
    reps: u32,
    seed: u64,
    out: &Path,
    overrides: &[(String, String)],
) -> anyhow::Result<()> {
    let results = harness::run(&config(condition, reps, seed, out, overrides.to_vec()))?;
    for r in &results {
        println!(
            "condition {} rep {}: 5xx={} service_attacks={} honeypot_attacks={} total_time={:.1}s f1={:.2}",
            r.condition_id,
            r.rep,
            r.five_xx_count,
            r.nginx_attacks_received,
            r.honeypot_attacks_received,
            r.total_request_time_s,
            r.first_f1
        );
    }
    Ok(())
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            condition,
            reps,
            seed,
            out,
            overrides,
        } => {
            let overrides = parse_overrides(&overrides)?;
            run_condition(condition, reps, seed, &out, &overrides)?;
        }
        Command::Report { out } => {
            let paths = harness::report(&out)?;
            println!("wrote {}", paths.results_csv.display());
            println!("wrote {}", paths.summary_csv.display());
        }
        Command::All {
            reps,
            seed,
            out,
            overrides,
        } => {
            let overrides = parse_overrides(&overrides)?;
            for condition in 1..=6 {
                run_condition(condition, reps, seed, &out, &overrides)?;
            }
            let paths = harness::report(&out)?;
            println!("wrote {}", paths.results_csv.display());
            println!("wrote {}", paths.summary_csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
