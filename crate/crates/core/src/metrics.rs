//! Communication rate, analytic DoA Cramér-Rao bound and a numeric Fisher
//! information cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dims, domain, Result};
use crate::linalg::{c, kron, re_trace, vec_of, CMat, CRow, CVec};
use crate::scene::{steering_rx, steering_rx_deriv, steering_tx, steering_tx_deriv, ChannelRealization};

/// Transmit beams (columns of `s_tx`) and RIS phases.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub s_tx: CMat,
    pub theta: CVec,
}

impl BeamformerSet {
    pub fn power(&self) -> f64 {
        self.s_tx.norm_squared()
    }

    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.theta.iter().all(|z| (z.norm() - 1.0).abs() <= tol)
    }
}

/// Effective channel row `c_k = ĥ_k^H + θ^H Ĥ_k`.
pub fn effective_channel(h_bu: &CVec, h_bru: &CMat, theta: &CVec) -> CRow {
    let direct = h_bu.adjoint();
    if theta.is_empty() {
        return direct;
    }
    direct + theta.adjoint() * h_bru
}

pub fn effective_channels(real: &ChannelRealization, theta: &CVec) -> Vec<CRow> {
    real.h_bu_hat
        .iter()
        .zip(&real.h_bru_hat)
        .map(|(h, g)| effective_channel(h, g, theta))
        .collect()
}

fn row_dot(row: &CRow, col: &CVec) -> Complex64 {
    row.iter().zip(col.iter()).map(|(a, b)| a * b).sum()
}

/// Achievable rate of user `k` in bit/s/Hz.
pub fn rate(c_k: &CRow, s: &CMat, k: usize, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return domain("noise power must be positive");
    }
    if k >= s.ncols() || c_k.len() != s.nrows() {
        return dims(format!("user {k} vs beam matrix {:?}", s.shape()));
    }
    let mut signal = 0.0;
    let mut interference = 0.0;
    for i in 0..s.ncols() {
        let g = row_dot(c_k, &s.column(i).into_owned()).norm_sqr();
        if i == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok((1.0 + signal / (interference + sigma2)).log2())
}

/// `Ȧ = ḃ(ϕ)a(φ)^T + b(ϕ)ȧ(φ)^T`, an N_R x N matrix.
pub fn a_dot_matrix(aod: f64, aoa: f64, n_tx: usize, n_rx: usize) -> CMat {
    let a = steering_tx(aod, n_tx);
    let a_d = steering_tx_deriv(aod, n_tx);
    let b = steering_rx(aoa, n_rx);
    let b_d = steering_rx_deriv(aoa, n_rx);
    &b_d * a.transpose() + &b * a_d.transpose()
}

/// CRB value; a beam with no energy in the derivative subspace yields an
/// unbounded CRB, represented without a floating-point infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Crb {
    Finite(f64),
    Unbounded,
}

impl Crb {
    pub fn at_most(self, threshold: f64) -> bool {
        matches!(self, Crb::Finite(v) if v <= threshold)
    }
}

/// `Tr(S^H Ȧ^H Ȧ S)`, computed as the squared Frobenius norm of `Ȧ S`.
pub fn sensing_trace(s: &CMat, a_dot: &CMat) -> f64 {
    (a_dot * s).norm_squared()
}

pub fn crb(s: &CMat, a_dot: &CMat, alpha: Complex64, sigma2_sen: f64) -> Result<Crb> {
    if !(sigma2_sen > 0.0) {
        return domain("sensing noise power must be positive");
    }
    if a_dot.ncols() != s.nrows() {
        return dims(format!("Ȧ is {:?} but S is {:?}", a_dot.shape(), s.shape()));
    }
    let denom = 2.0 * alpha.norm_sqr() * sensing_trace(s, a_dot);
    if !(denom > 0.0) || !denom.is_finite() {
        return Ok(Crb::Unbounded);
    }
    Ok(Crb::Finite(sigma2_sen / denom))
}

/// The three equivalent ways of writing the sensing trace: trace form,
/// vec/Kronecker form and a per-column sum.
pub fn crb_trace_forms(s: &CMat, a_dot: &CMat) -> [f64; 3] {
    let gram = a_dot.adjoint() * a_dot;
    let trace_form = re_trace(&(s.adjoint() * &gram * s));

    let k = s.ncols();
    let vs = vec_of(s);
    let big = kron(&CMat::identity(k, k), &gram);
    let kron_form = (vs.adjoint() * big * &vs)[(0, 0)].re;

    let column_form = (0..k)
        .map(|i| {
            let col = s.column(i).into_owned();
            re_trace(&(&col * col.adjoint() * &gram))
        })
        .sum();
    [trace_form, kron_form, column_form]
}

/// Fisher information for a single DoA parameter, obtained from a central
/// finite difference of the noise-free echo `α b(φ) a(φ)^T S` summed over
/// the unit-energy symbols (the columns of the identity).
pub fn fisher_numeric(
    s: &CMat,
    angle: f64,
    n_rx: usize,
    alpha: Complex64,
    sigma2_sen: f64,
    fd_step: f64,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&fd_step) {
        return domain(format!("fd_step {fd_step} outside [1e-7, 1e-3]"));
    }
    if !(sigma2_sen > 0.0) {
        return domain("sensing noise power must be positive");
    }
    let n = s.nrows();
    let echo = |phi: f64| -> CMat {
        steering_rx(phi, n_rx) * (steering_tx(phi, n).transpose() * s) * alpha
    };
    let dm = (echo(angle + fd_step) - echo(angle - fd_step)) * c(0.5 / fd_step, 0.0);
    Ok(2.0 * dm.norm_squared() / sigma2_sen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cscg_mat, cscg_vec};
    use crate::scene::trial_rng;
    use std::f64::consts::PI;

    #[test]
    fn rate_examples() {
        let s = CMat::from_element(1, 1, c(1.0, 0.0));
        let row = CRow::from_element(1, c(0.0, 2.0));
        assert!((rate(&row, &s, 0, 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rate(&row, &CMat::zeros(1, 1), 0, 4.0).unwrap(), 0.0);
        assert!(rate(&row, &s, 0, 0.0).is_err());
    }

    #[test]
    fn rate_matches_explicit_sinr() {
        let mut r = trial_rng(1, 0);
        let s = cscg_mat(&mut r, 3, 2);
        let row = cscg_vec(&mut r, 3).transpose();
        let g0 = (&row * s.column(0))[(0, 0)].norm_sqr();
        let g1 = (&row * s.column(1))[(0, 0)].norm_sqr();
        let want = (1.0 + g0 / (g1 + 0.3)).log2();
        assert!((rate(&row, &s, 0, 0.3).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rate_monotone_in_own_beam() {
        let mut r = trial_rng(2, 0);
        for _ in 0..100 {
            let mut s = cscg_mat(&mut r, 4, 2);
            let row = cscg_vec(&mut r, 4).transpose();
            let mut prev = -1.0;
            for step in 0..5 {
                if step > 0 {
                    let mut col = s.column_mut(0);
                    col *= c(1.5, 0.0);
                }
                let v = rate(&row, &s, 0, 0.5).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn a_dot_examples() {
        let z = a_dot_matrix(PI / 2.0, PI / 2.0, 3, 4);
        assert!(z.iter().all(|v| v.norm() < 1e-12));
        let a = a_dot_matrix(0.3, 0.3, 3, 4);
        assert_eq!(a[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn a_dot_matches_finite_difference() {
        let mut r = trial_rng(3, 0);
        for _ in 0..20 {
            let phi: f64 = rand::Rng::random_range(&mut r, -1.4..1.4);
            let h = 1e-6;
            let f = |p: f64| steering_rx(p, 5) * steering_tx(p, 4).transpose();
            let fd = (f(phi + h) - f(phi - h)) * c(0.5 / h, 0.0);
            let a = a_dot_matrix(phi, phi, 4, 5);
            assert!((fd - &a).norm() <= 1e-6 * a.norm().max(1.0));
        }
    }

    #[test]
    fn crb_scaling_and_sentinel() {
        let mut r = trial_rng(4, 0);
        let s = cscg_mat(&mut r, 4, 2);
        let ad = a_dot_matrix(0.4, 0.4, 4, 4);
        let alpha = c(0.3, -0.2);
        let Crb::Finite(base) = crb(&s, &ad, alpha, 1.0).unwrap() else { panic!() };
        let Crb::Finite(d) = crb(&(&s * c(2.0, 0.0)), &ad, alpha, 1.0).unwrap() else { panic!() };
        let Crb::Finite(a2) = crb(&s, &ad, alpha * 2.0, 1.0).unwrap() else { panic!() };
        assert!((d / base - 0.25).abs() < 1e-12);
        assert!((a2 / base - 0.25).abs() < 1e-12);
        assert_eq!(crb(&CMat::zeros(4, 2), &ad, alpha, 1.0).unwrap(), Crb::Unbounded);
        let Crb::Finite(rot) = crb(&(&s * Complex64::from_polar(1.0, 0.7)), &ad, alpha, 1.0).unwrap()
        else {
            panic!()
        };
        assert!((rot / base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_forms_agree() {
        let mut r = trial_rng(5, 0);
        assert_eq!(crb_trace_forms(&CMat::zeros(3, 2), &a_dot_matrix(0.1, 0.1, 3, 3)), [0.0; 3]);
        for t in 0..100 {
            let (n, k) = (2 + t % 5, 1 + t % 3);
            let s = cscg_mat(&mut r, n, k);
            let ad = a_dot_matrix(0.2 + 0.01 * t as f64, 0.2 + 0.01 * t as f64, n, n + 1);
            let f = crb_trace_forms(&s, &ad);
            for v in &f[1..] {
                assert!((v - f[0]).abs() <= 1e-10 * f[0].abs().max(1e-300));
            }
            assert!((sensing_trace(&s, &ad) - f[0]).abs() <= 1e-10 * f[0]);
        }
    }

    #[test]
    fn fisher_properties() {
        let mut r = trial_rng(6, 0);
        let s = cscg_mat(&mut r, 4, 2);
        assert_eq!(fisher_numeric(&s, 0.3, 4, c(0.0, 0.0), 1.0, 1e-5).unwrap(), 0.0);
        let f1 = fisher_numeric(&s, 0.3, 4, c(1.0, 0.5), 1.0, 1e-5).unwrap();
        let f3 = fisher_numeric(&s, 0.3, 4, c(1.0, 0.5), 3.0, 1e-5).unwrap();
        assert!((f1 / f3 - 3.0).abs() < 1e-12);
        assert!(fisher_numeric(&s, 0.3, 4, c(1.0, 0.0), 1.0, 1e-2).is_err());
        let Crb::Finite(b) = crb(&s, &a_dot_matrix(0.3, 0.3, 4, 4), c(1.0, 0.5), 1.0).unwrap() else {
            panic!()
        };
        assert!((b * f1 - 1.0).abs() < 1e-4);
    }
}
