//! Compares the closed-form CRB with a finite-difference Fisher information
//! for random beamformers.

use robust_isac::linalg::{c, cscg_mat};
use robust_isac::metrics::{a_dot_matrix, crb, fisher_numeric, Crb};
use robust_isac::scene::trial_rng;

fn main() -> anyhow::Result<()> {
    let mut rng = trial_rng(7, 0);
    let (n, n_rx, sigma2) = (8, 8, 1e-3);
    for i in 0..5 {
        let s = cscg_mat(&mut rng, n, 2);
        let angle = -1.0 + 0.5 * i as f64;
        let alpha = c(0.3, -0.2 + 0.1 * i as f64);
        let ad = a_dot_matrix(angle, angle, n, n_rx);
        let Crb::Finite(closed) = crb(&s, &ad, alpha, sigma2)? else {
            println!("angle {angle:+.2}: unbounded");
            continue;
        };
        let numeric = 1.0 / fisher_numeric(&s, angle, n_rx, alpha, sigma2, 1e-5)?;
        println!(
            "angle {angle:+.2}: closed form {closed:.6e}, numeric {numeric:.6e}, rel err {:.2e}",
            (closed - numeric).abs() / closed
        );
    }
    Ok(())
}
