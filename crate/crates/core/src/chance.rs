//! Safe convex restrictions of the rate-outage and CRB-failure chance
//! constraints, built from a large-deviation tail bound for Gaussian
//! quadratic forms.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{dims, domain, Result};
use crate::linalg::{c, frob, kron, re_trace, CMat, CRow, CVec};
use crate::metrics::{a_dot_matrix, crb, effective_channel, rate, BeamformerSet};
use crate::scene::{sample_errors, ChannelRealization, ScenarioConfig};

/// Root `v > 1/√2` of `(1 − 1/(2v²))·v = √ln(1/prob)`.
pub fn solve_v(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return domain(format!("probability {prob} outside (0, 1)"));
    }
    let s = (1.0 / prob).ln().sqrt();
    // multiplying through by v gives v² − s·v − 1/2 = 0
    let v = 0.5 * (s + (s * s + 2.0).sqrt());
    debug_assert!(((1.0 - 0.5 / (v * v)) * v - s).abs() < 1e-12);
    Ok(v)
}

/// Tail bound on `Pr{x^H Q x + 2Re(r^H x) ≤ Tr Q − η}` for `x ~ CN(0, I)`.
pub fn ldi_bound(q_norm_f: f64, r_norm: f64, eta: f64, v: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return domain("eta must be positive");
    }
    if !(v > std::f64::consts::FRAC_1_SQRT_2) {
        return domain("v must exceed 1/sqrt(2)");
    }
    let theta_bar = 1.0 - 0.5 / (v * v);
    let t = v * q_norm_f + r_norm / std::f64::consts::SQRT_2;
    if t == 0.0 {
        return Ok(0.0);
    }
    let tv = theta_bar * v;
    if eta <= 2.0 * tv * t {
        Ok((-eta * eta / (4.0 * t * t)).exp())
    } else {
        Ok((-tv * eta / t + tv * tv).exp())
    }
}

/// Per-user and per-target constants of the safe approximations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChanceParams {
    pub v: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
}

impl ChanceParams {
    pub fn new(rho: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let v = rho.iter().map(|&r| solve_v(r)).collect::<Result<_>>()?;
        let v_tilde = p.iter().map(|&q| solve_v(q)).collect::<Result<_>>()?;
        Ok(Self { v, v_tilde, rho, p })
    }

    /// `√ln(1/ρ_k)`.
    pub fn sqrt_log_rho(&self, k: usize) -> f64 {
        (1.0 / self.rho[k]).ln().sqrt()
    }

    pub fn sqrt_log_p(&self, l: usize) -> f64 {
        (1.0 / self.p[l]).ln().sqrt()
    }
}

/// QoS requirements of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Requirements {
    pub rate: Vec<f64>,
    pub crb: Vec<f64>,
    pub chance: ChanceParams,
}

impl Requirements {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(Self {
            rate: vec![cfg.rate_threshold_bps_hz; cfg.n_users],
            crb: vec![cfg.crb_threshold; cfg.n_targets],
            chance: ChanceParams::new(
                vec![cfg.outage_prob; cfg.n_users],
                vec![cfg.fail_prob; cfg.n_targets],
            )?,
        })
    }

    /// SINR target `2^{r_k} − 1`.
    pub fn sinr(&self, k: usize) -> f64 {
        2f64.powf(self.rate[k]) - 1.0
    }
}

/// `Ψ_k = s_k s_k^H / (2^{r_k} − 1) − Σ_{i≠k} s_i s_i^H`.
pub fn psi(s: &CMat, k: usize, rate_threshold: f64) -> CMat {
    let a = 2f64.powf(rate_threshold) - 1.0;
    let mut out = CMat::zeros(s.nrows(), s.nrows());
    for i in 0..s.ncols() {
        let col = s.column(i);
        let w = if i == k { 1.0 / a } else { -1.0 };
        out += col * col.adjoint() * c(w, 0.0);
    }
    out
}

/// Explicit quadratic form of the SINR margin in the stacked, normalized
/// error vector `e = [e_BU; vec(E_BRU)*]`.
#[derive(Debug, Clone)]
pub struct CommQuadraticForm {
    pub q_mat: CMat,
    pub r_vec: CVec,
    pub s_scalar: f64,
    pub psi: CMat,
    pub c_row: CRow,
    pub error_power: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn build_comm_form(
    s: &CMat,
    k: usize,
    theta: &CVec,
    h_hat: &CVec,
    big_h_hat: &CMat,
    gamma_bu: f64,
    gamma_bru: f64,
    rate_threshold: f64,
    sigma2: f64,
) -> Result<CommQuadraticForm> {
    let n = h_hat.len();
    let m = theta.len();
    if s.nrows() != n || big_h_hat.shape() != (m, n) || k >= s.ncols() {
        return dims("inconsistent beam, channel or phase dimensions");
    }
    let psi_k = psi(s, k, rate_threshold);
    let c_row = effective_channel(h_hat, big_h_hat, theta);
    let cpsi_h = &psi_k * c_row.adjoint();

    let theta_t = CMat::from_row_slice(1, m, theta.as_slice());
    let theta_c = CMat::from_column_slice(m, 1, theta.conjugate().as_slice());
    let id = CMat::identity(n, n);
    let (gb, gr) = (c(gamma_bu, 0.0), c(gamma_bru, 0.0));

    let mut q = CMat::zeros(n + m * n, n + m * n);
    q.view_mut((0, 0), (n, n)).copy_from(&(&psi_k * gb * gb));
    let upper = kron(&psi_k, &theta_t) * gb * gr;
    let lower = kron(&psi_k, &theta_c) * gb * gr;
    q.view_mut((0, n), (n, m * n)).copy_from(&upper);
    q.view_mut((n, 0), (m * n, n)).copy_from(&lower);
    let corner = kron(&psi_k, &(&theta_c * &theta_t)) * gr * gr;
    q.view_mut((n, n), (m * n, m * n)).copy_from(&corner);

    let mut r = CVec::zeros(n + m * n);
    r.rows_mut(0, n).copy_from(&(&cpsi_h * gb));
    r.rows_mut(n, m * n).copy_from(&(kron(&id, &theta_c) * &cpsi_h * gr));

    let s_scalar = (&c_row * &cpsi_h)[(0, 0)].re - sigma2;
    let error_power = gamma_bu * gamma_bu + gamma_bru * gamma_bru * theta.norm_squared();
    Ok(CommQuadraticForm { q_mat: q, r_vec: r, s_scalar, psi: psi_k, c_row, error_power })
}

impl CommQuadraticForm {
    /// `e^H Q e + 2 Re(r^H e) + s`.
    pub fn evaluate(&self, e: &CVec) -> f64 {
        let quad = (e.adjoint() * &self.q_mat * e)[(0, 0)].re;
        let lin = (self.r_vec.adjoint() * e)[(0, 0)].re;
        quad + 2.0 * lin + self.s_scalar
    }
}

/// Ingredients of the deterministic restriction `lhs ≥ 2√ln(1/ρ)·(x + y)`.
#[derive(Debug, Clone)]
pub struct CommSocTerms {
    pub lhs: f64,
    /// `c Ψ`, whose scaled norm is `x`.
    pub x_vec: CRow,
    pub x: f64,
    pub y: f64,
}

impl CommSocTerms {
    pub fn from_parts(psi: &CMat, c_row: &CRow, error_power: f64, sigma2: f64, v: f64) -> Self {
        let x_vec = c_row * psi;
        let nominal = (&x_vec * c_row.adjoint())[(0, 0)].re;
        let lhs = error_power * re_trace(psi) + nominal - sigma2;
        let x = (error_power / 2.0).sqrt() * x_vec.norm();
        let y = v * error_power * frob(psi);
        Self { lhs, x_vec, x, y }
    }

    pub fn margin(&self, rho: f64) -> f64 {
        self.lhs - 2.0 * (1.0 / rho).ln().sqrt() * (self.x + self.y)
    }

    pub fn satisfied(&self, rho: f64) -> bool {
        self.margin(rho) >= 0.0
    }
}

pub fn comm_soc_terms(form: &CommQuadraticForm, sigma2: f64, v: f64) -> CommSocTerms {
    CommSocTerms::from_parts(&form.psi, &form.c_row, form.error_power, sigma2, v)
}

/// Outcome of the sensing restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensingBound {
    /// Lower bound on `Σ_k Tr(s_k s_k^H Ȧ^H Ȧ)`.
    Finite(f64),
    /// No finite power can meet the failure probability.
    Infeasible,
}

/// Lower bound on the sensing trace that guarantees
/// `Pr{CRB ≤ c_l} ≥ 1 − p_l` when `α = α̂ + Δα`, `Δα ~ CN(0, ε²)`.
pub fn sensing_rhs(
    alpha_hat: Complex64,
    eps: f64,
    c_l: f64,
    sigma2_sen: f64,
    p_l: f64,
    v_tilde: f64,
) -> Result<SensingBound> {
    if !(c_l > 0.0 && sigma2_sen > 0.0) {
        return domain("CRB threshold and noise power must be positive");
    }
    if !(p_l > 0.0 && p_l < 1.0) {
        return domain("failure probability outside (0, 1)");
    }
    let l = (1.0 / p_l).ln().sqrt();
    let bracket = eps * eps + alpha_hat.norm_sqr()
        - 2.0 * l * (v_tilde * eps * eps + eps * alpha_hat.norm() / std::f64::consts::SQRT_2);
    if !(bracket > 0.0) {
        return Ok(SensingBound::Infeasible);
    }
    Ok(SensingBound::Finite(sigma2_sen / (2.0 * c_l * bracket)))
}

/// Per-constraint margins of the deterministic restrictions at `(S, θ)`.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    /// Communication margin divided by the user's noise power.
    pub comm: Vec<f64>,
    /// `trace / rhs − 1` per target; `None` when the sensing bound is
    /// infeasible for every beamformer.
    pub sensing: Vec<Option<f64>>,
}

impl ConstraintReport {
    pub fn worst(&self) -> f64 {
        let c = self.comm.iter().copied().fold(f64::INFINITY, f64::min);
        self.sensing
            .iter()
            .map(|s| s.unwrap_or(f64::NEG_INFINITY))
            .fold(c, f64::min)
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.worst() >= -tol
    }
}

pub fn sensing_bounds(real: &ChannelRealization, req: &Requirements) -> Result<Vec<SensingBound>> {
    (0..real.n_targets())
        .map(|l| {
            sensing_rhs(
                real.alpha_hat[l],
                real.eps[l],
                req.crb[l],
                real.sigma2_sen,
                req.chance.p[l],
                req.chance.v_tilde[l],
            )
        })
        .collect()
}

pub fn check_constraints(
    real: &ChannelRealization,
    bf: &BeamformerSet,
    req: &Requirements,
) -> Result<ConstraintReport> {
    let mut comm = Vec::with_capacity(real.n_users());
    for k in 0..real.n_users() {
        let psi_k = psi(&bf.s_tx, k, req.rate[k]);
        let c_row = effective_channel(&real.h_bu_hat[k], &real.h_bru_hat[k], &bf.theta);
        let g = real.gamma_bu[k].powi(2) + real.gamma_bru[k].powi(2) * bf.theta.norm_squared();
        let terms = CommSocTerms::from_parts(&psi_k, &c_row, g, real.sigma2_com[k], req.chance.v[k]);
        comm.push(terms.margin(req.chance.rho[k]) / real.sigma2_com[k]);
    }
    let n = real.n_tx();
    let sensing = sensing_bounds(real, req)?
        .into_iter()
        .enumerate()
        .map(|(l, b)| match b {
            SensingBound::Infeasible => None,
            SensingBound::Finite(rhs) => {
                let ad = a_dot_matrix(real.aod[l], real.aoa[l], n, real.n_rx);
                Some(crate::metrics::sensing_trace(&bf.s_tx, &ad) / rhs - 1.0)
            }
        })
        .collect();
    Ok(ConstraintReport { comm, sensing })
}

/// Monte Carlo violation frequencies of the original chance constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageReport {
    pub rate_outage: Vec<f64>,
    pub crb_failure: Vec<f64>,
    pub n_draws: usize,
}

impl OutageReport {
    pub fn max_rate_outage(&self) -> f64 {
        self.rate_outage.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_crb_failure(&self) -> f64 {
        self.crb_failure.iter().copied().fold(0.0, f64::max)
    }
}

/// Binomial standard deviation of an empirical frequency.
pub fn binomial_std(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn empirical_outage<R: Rng + ?Sized>(
    bf: &BeamformerSet,
    real: &ChannelRealization,
    req: &Requirements,
    n_draws: usize,
    rng: &mut R,
) -> Result<OutageReport> {
    if n_draws == 0 {
        return domain("n_draws must be positive");
    }
    let (k_users, l_targets) = (real.n_users(), real.n_targets());
    let n = real.n_tx();
    let a_dots: Vec<CMat> = (0..l_targets)
        .map(|l| a_dot_matrix(real.aod[l], real.aoa[l], n, real.n_rx))
        .collect();
    let mut rate_fail = vec![0usize; k_users];
    let mut crb_fail = vec![0usize; l_targets];
    for _ in 0..n_draws {
        let err = sample_errors(real, rng);
        for k in 0..k_users {
            let h = &real.h_bu_hat[k] + &err.dh_bu[k];
            let g = &real.h_bru_hat[k] + &err.dh_bru[k];
            let c_row = effective_channel(&h, &g, &bf.theta);
            if rate(&c_row, &bf.s_tx, k, real.sigma2_com[k])? < req.rate[k] {
                rate_fail[k] += 1;
            }
        }
        for l in 0..l_targets {
            let alpha = real.alpha_hat[l] + err.dalpha[l];
            if !crb(&bf.s_tx, &a_dots[l], alpha, real.sigma2_sen)?.at_most(req.crb[l]) {
                crb_fail[l] += 1;
            }
        }
    }
    let frac = |v: Vec<usize>| v.into_iter().map(|x| x as f64 / n_draws as f64).collect();
    Ok(OutageReport { rate_outage: frac(rate_fail), crb_failure: frac(crb_fail), n_draws })
}

/// Direct evaluation of the true SINR margin `c̃ Ψ c̃^H − σ²` for given
/// channel errors; used to cross-check the quadratic form.
pub fn direct_sinr_margin(
    psi_k: &CMat,
    h_hat: &CVec,
    big_h_hat: &CMat,
    dh: &CVec,
    d_big_h: &CMat,
    theta: &CVec,
    sigma2: f64,
) -> f64 {
    let c_row = effective_channel(&(h_hat + dh), &(big_h_hat + d_big_h), theta);
    (&c_row * psi_k * c_row.adjoint())[(0, 0)].re - sigma2
}
