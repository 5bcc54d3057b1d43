//! Samples one channel realization at the default scenario and prints its
//! sizes, link strengths and error scales.

use robust_isac::linalg::watts_to_dbm;
use robust_isac::scene::{sample_realization, trial_rng, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(1), |s| s.parse())?;
    let cfg = ScenarioConfig::default();
    let real = sample_realization(&cfg, &mut trial_rng(seed, 0))?;
    println!(
        "N={} M={} K={} L={} receive antennas={}",
        real.n_tx(),
        real.n_ris(),
        real.n_users(),
        real.n_targets(),
        real.n_rx
    );
    for k in 0..real.n_users() {
        let direct = real.h_bu_hat[k].norm_squared();
        let cascade = real.h_bru_hat[k].norm_squared();
        println!(
            "user {k}: |h_bu|^2 {:.2} dB, |H_bru|_F^2 {:.2} dB, gamma_bu {:.3e}, gamma_bru {:.3e}, error power {:.3e}",
            10.0 * direct.log10(),
            10.0 * cascade.log10(),
            real.gamma_bu[k],
            real.gamma_bru[k],
            real.error_power(k)
        );
    }
    for l in 0..real.n_targets() {
        println!(
            "target {l}: angle {:.2} deg, |alpha| {:.3e}, eps {:.3e}",
            real.aod[l].to_degrees(),
            real.alpha_hat[l].norm(),
            real.eps[l]
        );
    }
    println!(
        "noise: communication {:.1} dBm, sensing {:.1} dBm",
        watts_to_dbm(real.sigma2_com[0]),
        watts_to_dbm(real.sigma2_sen)
    );
    Ok(())
}
