//! Runs a small sweep over the number of RIS elements through the harness
//! and prints the aggregate table.

use robust_isac::ao::Scheme;
use robust_isac::harness::{aggregate, run_experiment, ExperimentSpec, SweepVar};

fn main() -> anyhow::Result<()> {
    let trials: usize = std::env::args().nth(1).map_or(Ok(4), |s| s.parse())?;
    let spec = ExperimentSpec {
        sweep: SweepVar::NRis,
        values: vec![4.0, 8.0, 16.0],
        trials,
        schemes: vec![Scheme::Sdr, Scheme::Gemm],
        certify_draws: 2000,
        ..ExperimentSpec::from_json(r#"{"sweep": "n_ris", "values": [4]}"#)?
    };
    let result = run_experiment(&spec)?;
    for row in aggregate(&result.records) {
        println!("{row:?}");
    }
    for r in result.records.iter().filter(|r| r.feasible) {
        println!(
            "M={} seed={} {:<4} outage {:.4} crb failure {:.4}",
            r.sweep,
            r.seed,
            r.scheme.name(),
            r.max_outage.unwrap_or(f64::NAN),
            r.max_crb_fail.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
