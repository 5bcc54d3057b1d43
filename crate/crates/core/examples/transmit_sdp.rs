//! Solves the robust transmit relaxation for one sampled channel and compares
//! the relaxation bound with the recovered beamformer power.

use std::time::Instant;

use robust_isac::chance::{check_constraints, Requirements};
use robust_isac::conic::Settings;
use robust_isac::linalg::{c, watts_to_dbm, CVec};
use robust_isac::metrics::BeamformerSet;
use robust_isac::scene::{sample_realization, trial_rng, ScenarioConfig};
use robust_isac::sdr::{build_transmit_sdp, solve_transmit, solve_transmit_sdp, TransmitBuild};

fn main() -> anyhow::Result<()> {
    let cfg = ScenarioConfig::default();
    let mut rng = trial_rng(cfg.rng_seed, 0);
    let real = sample_realization(&cfg, &mut rng)?;
    let req = Requirements::from_config(&cfg)?;
    let theta = CVec::from_element(cfg.n_ris, c(1.0, 0.0));

    let start = Instant::now();
    let TransmitBuild::Ready(sdp) = build_transmit_sdp(&real, &theta, &req)? else {
        println!("sensing restriction infeasible for this draw");
        return Ok(());
    };
    println!(
        "program: {} variables, {} rows, built in {:.1} ms",
        sdp.program.n_vars(),
        sdp.program.rows.len(),
        start.elapsed().as_secs_f64() * 1e3
    );
    let start = Instant::now();
    let Some(sol) = solve_transmit_sdp(&sdp, &Settings::default())? else {
        println!("relaxation infeasible");
        return Ok(());
    };
    println!("solved ({:?}) in {:.1} ms", sol.status, start.elapsed().as_secs_f64() * 1e3);
    let Some(out) = solve_transmit(&real, &theta, &req, &sol, 1e-6, 100, &mut rng)? else {
        println!("no feasible beamformer recovered");
        return Ok(());
    };
    let bf = BeamformerSet { s_tx: out.s.clone(), theta };
    let report = check_constraints(&real, &bf, &req)?;
    println!("relaxation bound : {:.3} dBm", watts_to_dbm(out.sdr_power));
    println!("recovered power  : {:.3} dBm (rank one: {})", watts_to_dbm(out.power), out.rank_one);
    println!("worst margin     : {:.3e}", report.worst());
    Ok(())
}
