//! Optimizes one scenario and checks the returned design against the
//! original chance constraints by sampling channel errors.

use robust_isac::ao::{run_ao, AoConfig, Scheme};
use robust_isac::chance::{binomial_std, empirical_outage, Requirements};
use robust_isac::linalg::watts_to_dbm;
use robust_isac::scene::{sample_realization, trial_rng, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let draws: usize = std::env::args().nth(1).map_or(Ok(10_000), |s| s.parse())?;
    let cfg = ScenarioConfig::default();
    let req = Requirements::from_config(&cfg)?;
    let real = sample_realization(&cfg, &mut trial_rng(5, 0))?;
    let trace = run_ao(&real, &req, &AoConfig::new(Scheme::Sdr, cfg.levels()), &mut trial_rng(5, 1))?;
    let Some(bf) = trace.beamformers() else {
        anyhow::bail!("no feasible design ({:?})", trace.status);
    };
    println!("design power {:.3} dBm after {} AO iterations", watts_to_dbm(bf.power()), trace.iterations.len());
    let rep = empirical_outage(&bf, &real, &req, draws, &mut trial_rng(5, 2))?;
    let limit = |p: f64| p + 3.0 * binomial_std(p, draws);
    for (k, o) in rep.rate_outage.iter().enumerate() {
        println!("user {k}: rate outage {o:.4} (allowed {:.4})", limit(cfg.outage_prob));
    }
    for (l, f) in rep.crb_failure.iter().enumerate() {
        println!("target {l}: CRB failure {f:.4} (allowed {:.4})", limit(cfg.fail_prob));
    }
    Ok(())
}
