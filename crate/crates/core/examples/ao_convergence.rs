//! Runs alternating optimization with each RIS scheme on a few sampled
//! channels and prints the per-iteration transmit power.

use robust_isac::ao::{run_ao, AoConfig, Scheme};
use robust_isac::chance::Requirements;
use robust_isac::linalg::watts_to_dbm;
use robust_isac::scene::{sample_realization, trial_rng, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).map_or(Ok(3), |s| s.parse())?;
    let cfg = ScenarioConfig::default();
    let req = Requirements::from_config(&cfg)?;
    for seed in 0..seeds {
        let real = sample_realization(&cfg, &mut trial_rng(seed, 0))?;
        println!("seed {seed}");
        for scheme in Scheme::ALL {
            let ao = AoConfig::new(scheme, cfg.levels());
            let trace = run_ao(&real, &req, &ao, &mut trial_rng(seed, 1))?;
            let powers: Vec<String> =
                trace.iterations.iter().map(|it| format!("{:.2}", watts_to_dbm(it.power_w))).collect();
            let ms: f64 = trace.iterations.iter().map(|it| it.transmit_ms + it.ris_ms).sum();
            let ris_ms: f64 = trace.iterations.iter().map(|it| it.ris_ms).sum();
            println!(
                "  {:<10} {:?} feasible={} iters={} {:.0} ms (RIS {:.0} ms)  [{}]",
                scheme.name(),
                trace.status,
                trace.feasible,
                trace.iterations.len(),
                ms,
                ris_ms,
                powers.join(" ")
            );
        }
    }
    Ok(())
}
