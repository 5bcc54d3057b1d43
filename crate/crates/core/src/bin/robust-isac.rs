use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_isac::ao::Scheme;
use robust_isac::harness::{aggregate, emit_outputs, run_experiment_with_workers, ExperimentSpec};
use robust_isac::scene::ScenarioConfig;
use robust_isac::Error;

#[derive(Parser)]
#[command(version, about = "Robust transmit/RIS beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write records, aggregates, traces and a plot script.
    Run {
        /// Scenario JSON (missing fields take their defaults).
        #[arg(long)]
        config: PathBuf,
        /// Experiment JSON: sweep, values, trials, schemes, AO settings.
        #[arg(long)]
        experiment: PathBuf,
        /// Output path prefix.
        #[arg(long)]
        out: String,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// sdr, gemm, continuous or all.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        certify_draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })
}

#[allow(clippy::too_many_arguments)]
fn load_spec(
    config: &PathBuf,
    experiment: &PathBuf,
    trials: Option<usize>,
    scheme: Option<&str>,
    certify_draws: Option<usize>,
    seed: Option<u64>,
) -> Result<ExperimentSpec, Error> {
    let base = ScenarioConfig::from_json(&read(config)?)?;
    let mut spec: ExperimentSpec =
        serde_json::from_str(&read(experiment)?).map_err(|e| Error::Config(format!("{}: {e}", experiment.display())))?;
    spec.base = base;
    if let Some(t) = trials {
        spec.trials = t;
    }
    match scheme {
        None | Some("all") => {}
        Some(s) => spec.schemes = vec![Scheme::parse(s)?],
    }
    if let Some(n) = certify_draws {
        spec.certify_draws = n;
    }
    if seed.is_some() {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, experiment, out, workers, trials, scheme, certify_draws, seed } = cli.command;
    let spec = match load_spec(&config, &experiment, trials, scheme.as_deref(), certify_draws, seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = match run_experiment_with_workers(&spec, workers) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let sweep_name = serde_json::to_value(spec.sweep).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    match emit_outputs(&result.records, &result.traces, &sweep_name, &out) {
        Ok(paths) => {
            for row in aggregate(&result.records) {
                let power = row.mean_power_dbm.map_or("NA".to_string(), |p| format!("{p:.2} dBm"));
                println!(
                    "{sweep_name}={:<8} {:<10} feasible {}/{}  mean power {power}",
                    row.sweep,
                    row.scheme.name(),
                    row.feasible,
                    row.trials
                );
            }
            println!("wrote {}", paths.records.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
