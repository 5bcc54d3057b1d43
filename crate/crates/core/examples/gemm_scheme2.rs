//! Solves the transmit relaxation at random discrete phases, then runs the
//! penalized minorize-maximize phase update and prints its objective trace.

use robust_isac::ao::random_phases;
use robust_isac::chance::Requirements;
use robust_isac::conic::Settings;
use robust_isac::gemm::{default_lambda, run_gemm, GemmConfig};
use robust_isac::scene::{sample_realization, trial_rng, ScenarioConfig};
use robust_isac::sdr::{
    build_transmit_sdp, map_to_discrete, ris_sdp_blocks, solve_transmit, solve_transmit_sdp, TransmitBuild,
};

fn main() -> anyhow::Result<()> {
    let cfg = ScenarioConfig::default();
    let d = cfg.levels();
    let req = Requirements::from_config(&cfg)?;
    let mut rng = trial_rng(3, 0);
    let real = sample_realization(&cfg, &mut rng)?;
    let theta = random_phases(cfg.n_ris, d, &mut rng);

    let TransmitBuild::Ready(sdp) = build_transmit_sdp(&real, &theta, &req)? else {
        anyhow::bail!("sensing restriction infeasible for this draw");
    };
    let Some(sol) = solve_transmit_sdp(&sdp, &Settings::default())? else {
        anyhow::bail!("transmit relaxation infeasible");
    };
    let Some(tx) = solve_transmit(&real, &theta, &req, &sol, 1e-6, 100, &mut rng)? else {
        anyhow::bail!("no beamformer recovered");
    };

    let blocks = ris_sdp_blocks(&real, &tx.s, &req)?;
    let lambda = default_lambda(&blocks, &theta, 10.0);
    let res = run_gemm(&theta, &blocks, &GemmConfig::new(lambda, 200, d));
    println!("lambda {lambda:.3e}, {} iterations, stalled {}", res.iterations, res.stalled);
    for (i, v) in res.objective.iter().enumerate().step_by(10.max(res.objective.len() / 10)) {
        println!("  iter {i:>3}: objective {v:.6e}");
    }
    println!("  final    : objective {:.6e}", res.objective.last().copied().unwrap_or(f64::NAN));
    let mapped = map_to_discrete(&res.theta, d);
    println!("min margin before {:.4e}, after mapping {:.4e}", blocks.min_margin(&theta), blocks.min_margin(&mapped));
    Ok(())
}
