//! Semidefinite relaxations of the transmit and RIS subproblems, Gaussian
//! randomization and discrete phase mapping.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::chance::{psi, sensing_bounds, CommSocTerms, Requirements, SensingBound};
use crate::conic::{
    complex_functional, extract_rank_one, hermitian_functional, solve, unembed_hermitian, Block,
    Cone, ConicProgram, ConicSolution, ProgramBuilder, RankOne, Settings, Status,
};
use crate::error::{dims, Result};
use crate::linalg::{c, cscg_vec, frob, herm_eig, re_trace, unit_modulus, CMat, CVec};
use crate::metrics::{a_dot_matrix, effective_channel, sensing_trace};
use crate::scene::ChannelRealization;

/// A solution is used if it is optimal, or if the solver stopped early with
/// residuals small enough that the a-posteriori checks will decide.
pub fn usable(sol: &ConicSolution) -> bool {
    match sol.status {
        Status::Optimal => true,
        Status::MaxIter => sol.residuals.primal < 1e-5 && sol.residuals.dual < 1e-5,
        _ => false,
    }
}

/// Error power `γ²_BU + γ²_BRU·‖θ‖²` of user `k`.
fn error_power(real: &ChannelRealization, k: usize, theta: &CVec) -> f64 {
    real.gamma_bu[k].powi(2) + real.gamma_bru[k].powi(2) * theta.norm_squared()
}

/// Transmit-covariance SDP for a fixed RIS configuration.
#[derive(Debug, Clone)]
pub struct TransmitSdp {
    pub program: ConicProgram,
    /// One embedded `2N × 2N` block per user.
    pub gamma_blocks: Vec<Block>,
    /// Covariances are solved in units of `power_unit` watts.
    pub power_unit: f64,
}

#[derive(Debug, Clone)]
pub enum TransmitBuild {
    Ready(TransmitSdp),
    /// A sensing restriction cannot be met at any power.
    SensingInfeasible,
}

/// Builds the relaxed transmit problem
/// `min Σ Tr Γ_k` subject to the safe rate and CRB restrictions.
///
/// Per user, with noise normalized to one, `a = 2^r − 1`,
/// `Ψ_k = Γ_k / a − Σ_{i≠k} Γ_i` and `g` the error power:
///
/// ```text
/// g·Tr Ψ_k + c Ψ_k c^H − 2√ln(1/ρ)·(√(g/2)·t_k + v·g·τ_k) ≥ 1
/// ‖c Ψ_k‖ ≤ t_k,   ‖Ψ_k‖_F ≤ τ_k
/// ```
///
/// `c Ψ_k` is linear in the covariances, so both norms are ordinary second
/// order cones over linear images. Per target the sensing trace
/// `Σ_k Tr(Ȧ^H Ȧ Γ_k)` must exceed the safe bound.
pub fn build_transmit_sdp(
    real: &ChannelRealization,
    theta: &CVec,
    req: &Requirements,
) -> Result<TransmitBuild> {
    let (n, k_users) = (real.n_tx(), real.n_users());
    if theta.len() != real.n_ris() {
        return dims("phase vector length differs from RIS size");
    }
    let bounds = sensing_bounds(real, req)?;
    if bounds.iter().any(|b| *b == SensingBound::Infeasible) {
        return Ok(TransmitBuild::SensingInfeasible);
    }

    let rows_c: Vec<_> = (0..k_users)
        .map(|k| effective_channel(&real.h_bu_hat[k], &real.h_bru_hat[k], theta))
        .collect();
    let power_unit = (0..k_users)
        .map(|k| req.sinr(k) * real.sigma2_com[k] / rows_c[k].norm_squared().max(1e-300))
        .sum::<f64>()
        / k_users as f64;
    // normalized data: unit noise, covariances in units of power_unit
    let c_hat: Vec<_> = (0..k_users)
        .map(|k| &rows_c[k] * c((power_unit / real.sigma2_com[k]).sqrt(), 0.0))
        .collect();
    let g_hat: Vec<f64> = (0..k_users)
        .map(|k| error_power(real, k, theta) * power_unit / real.sigma2_com[k])
        .collect();

    let mut pb = ProgramBuilder::new();
    let gamma_blocks: Vec<Block> =
        (0..k_users).map(|k| pb.add_block(format!("gamma_{k}"), Cone::Psd(2 * n))).collect();
    let t_blocks: Vec<Block> =
        (0..k_users).map(|k| pb.add_block(format!("cpsi_{k}"), Cone::Soc(1 + 2 * n))).collect();
    let f_blocks: Vec<Block> =
        (0..k_users).map(|k| pb.add_block(format!("psi_frob_{k}"), Cone::Soc(1 + n * n))).collect();
    let slack = pb.add_block("slack", Cone::NonNeg(k_users + real.n_targets()));

    for blk in &gamma_blocks {
        for i in 0..2 * n {
            pb.add_cost(blk.psd_index(i, i), 0.5);
        }
    }

    // Σ_i w_{k,i}·f(Γ_i) for a functional f and Ψ_k's mixing weights
    let psi_row = |k: usize, f: &dyn Fn(&Block) -> Vec<(usize, f64)>| -> Vec<(usize, f64)> {
        let a = req.sinr(k);
        let mut out = Vec::new();
        for (i, blk) in gamma_blocks.iter().enumerate() {
            let w = if i == k { 1.0 / a } else { -1.0 };
            out.extend(f(blk).into_iter().map(|(j, v)| (j, w * v)));
        }
        out
    };

    let sq2 = std::f64::consts::SQRT_2;
    for k in 0..k_users {
        // u = [Re cΨ; Im cΨ]
        for col in 0..n {
            let mut b = CMat::zeros(n, n);
            b.row_mut(col).copy_from(&c_hat[k]);
            let pieces = |blk: &Block| complex_functional(&b, blk);
            let mut re = psi_row(k, &|blk| pieces(blk).0);
            re.push((t_blocks[k].col(1 + col), -1.0));
            pb.add_row(re, 0.0);
            let mut im = psi_row(k, &|blk| pieces(blk).1);
            im.push((t_blocks[k].col(1 + n + col), -1.0));
            pb.add_row(im, 0.0);
        }
        // w = [diag Ψ; √2 Re Ψ_pq; √2 Im Ψ_pq]
        let mut pos = 1;
        for p in 0..n {
            let mut e = CMat::zeros(n, n);
            e[(p, p)] = c(1.0, 0.0);
            let mut row = psi_row(k, &|blk| hermitian_functional(&e, blk));
            row.push((f_blocks[k].col(pos), -1.0));
            pb.add_row(row, 0.0);
            pos += 1;
        }
        for p in 0..n {
            for q in p + 1..n {
                let mut e = CMat::zeros(n, n);
                e[(q, p)] = c(sq2, 0.0);
                let (re, im) = (
                    psi_row(k, &|blk| complex_functional(&e, blk).0),
                    psi_row(k, &|blk| complex_functional(&e, blk).1),
                );
                let mut re = re;
                re.push((f_blocks[k].col(pos), -1.0));
                pb.add_row(re, 0.0);
                let mut im = im;
                im.push((f_blocks[k].col(pos + 1), -1.0));
                pb.add_row(im, 0.0);
                pos += 2;
            }
        }
        // main restriction
        let l = 2.0 * req.chance.sqrt_log_rho(k);
        let quad = CMat::identity(n, n) * c(g_hat[k], 0.0) + c_hat[k].adjoint() * &c_hat[k];
        let mut row = psi_row(k, &|blk| hermitian_functional(&quad, blk));
        row.push((t_blocks[k].col(0), -l * (g_hat[k] / 2.0).sqrt()));
        row.push((f_blocks[k].col(0), -l * req.chance.v[k] * g_hat[k]));
        row.push((slack.col(k), -1.0));
        pb.add_row(row, 1.0);
    }

    for (l, bound) in bounds.iter().enumerate() {
        let SensingBound::Finite(rhs) = *bound else { unreachable!() };
        let ad = a_dot_matrix(real.aod[l], real.aoa[l], n, real.n_rx);
        let gram = ad.adjoint() * &ad;
        let mut row = Vec::new();
        for blk in &gamma_blocks {
            row.extend(hermitian_functional(&gram, blk));
        }
        row.push((slack.col(k_users + l), -1.0));
        pb.add_row(row, rhs / power_unit);
    }

    Ok(TransmitBuild::Ready(TransmitSdp { program: pb.build(), gamma_blocks, power_unit }))
}

#[derive(Debug, Clone)]
pub struct TransmitSolution {
    pub gammas: Vec<CMat>,
    /// `Σ Tr Γ_k` in watts, a lower bound on any rank-one solution.
    pub sdr_power: f64,
    pub status: Status,
}

pub fn solve_transmit_sdp(sdp: &TransmitSdp, settings: &Settings) -> Result<Option<TransmitSolution>> {
    let sol = solve(&sdp.program, settings)?;
    if !usable(&sol) {
        return Ok(None);
    }
    let gammas: Vec<CMat> = sdp
        .gamma_blocks
        .iter()
        .map(|blk| {
            let g = unembed_hermitian(&sol.psd_block(blk)) * c(sdp.power_unit, 0.0);
            crate::linalg::hermitian_part(&g)
        })
        .collect();
    let sdr_power = gammas.iter().map(re_trace).sum();
    Ok(Some(TransmitSolution { gammas, sdr_power, status: sol.status }))
}

/// Smallest common factor `t` such that `t·S` meets every restriction.
///
/// All restrictions are homogeneous of degree two in `S` apart from the
/// noise term, so each one fixes a lower bound on `t²` in closed form.
/// Returns `None` when no scaling helps (a non-positive communication
/// coefficient, a beam with no sensing energy, or an infeasible bound).
pub fn required_scale(
    real: &ChannelRealization,
    s: &CMat,
    theta: &CVec,
    req: &Requirements,
) -> Result<Option<f64>> {
    let mut t2 = 0.0_f64;
    for k in 0..real.n_users() {
        let psi_k = psi(s, k, req.rate[k]);
        let c_row = effective_channel(&real.h_bu_hat[k], &real.h_bru_hat[k], theta);
        let terms = CommSocTerms::from_parts(&psi_k, &c_row, error_power(real, k, theta), 0.0, req.chance.v[k]);
        let coef = terms.margin(req.chance.rho[k]);
        if !(coef > 0.0) {
            return Ok(None);
        }
        t2 = t2.max(real.sigma2_com[k] / coef);
    }
    for (l, b) in sensing_bounds(real, req)?.into_iter().enumerate() {
        let SensingBound::Finite(rhs) = b else { return Ok(None) };
        let ad = a_dot_matrix(real.aod[l], real.aoa[l], real.n_tx(), real.n_rx);
        let tr = sensing_trace(s, &ad);
        if !(tr > 0.0) {
            return Ok(None);
        }
        t2 = t2.max(rhs / tr);
    }
    // a hair above the boundary so the a-posteriori checks see margin ≥ 0
    Ok(Some(t2.sqrt() * (1.0 + 1e-9)))
}

#[derive(Debug, Clone)]
pub struct TransmitOutcome {
    pub s: CMat,
    pub power: f64,
    pub sdr_power: f64,
    pub rank_one: bool,
}

/// Recovers beamformers from a solved relaxation: principal eigenvectors if
/// every covariance is rank one, otherwise the cheapest feasible candidate
/// among `g_max` Gaussian draws `s_k ~ CN(0, Γ_k)`. Every returned `S` is
/// rescaled to the smallest power meeting all restrictions.
pub fn solve_transmit<R: Rng + ?Sized>(
    real: &ChannelRealization,
    theta: &CVec,
    req: &Requirements,
    sol: &TransmitSolution,
    rank_tol: f64,
    g_max: usize,
    rng: &mut R,
) -> Result<Option<TransmitOutcome>> {
    let n = real.n_tx();
    let k_users = real.n_users();
    let mut s = CMat::zeros(n, k_users);
    let mut all_rank_one = true;
    for (k, g) in sol.gammas.iter().enumerate() {
        match extract_rank_one(g, rank_tol)? {
            RankOne::Vector(v) => s.set_column(k, &v),
            RankOne::NotRankOne { .. } => {
                all_rank_one = false;
                let (vals, vecs) = herm_eig(g);
                s.set_column(k, &(vecs.column(n - 1) * c(vals[n - 1].max(0.0).sqrt(), 0.0)));
            }
        }
    }
    let mut best: Option<(f64, CMat)> = None;
    if let Some(t) = required_scale(real, &s, theta, req)? {
        let scaled = &s * c(t, 0.0);
        best = Some((scaled.norm_squared(), scaled));
    }
    if !all_rank_one || best.is_none() {
        let factors: Vec<CMat> = sol
            .gammas
            .iter()
            .map(|g| {
                let (vals, vecs) = herm_eig(g);
                let d = CVec::from_iterator(n, vals.iter().map(|v| c(v.max(0.0).sqrt(), 0.0)));
                vecs * CMat::from_diagonal(&d)
            })
            .collect();
        for _ in 0..g_max {
            let mut cand = CMat::zeros(n, k_users);
            for k in 0..k_users {
                cand.set_column(k, &(&factors[k] * cscg_vec(rng, n)));
            }
            if let Some(t) = required_scale(real, &cand, theta, req)? {
                let p = t * t * cand.norm_squared();
                if best.as_ref().is_none_or(|(bp, _)| p < *bp) {
                    best = Some((p, cand * c(t, 0.0)));
                }
            }
        }
    }
    Ok(best.map(|(power, s)| TransmitOutcome { s, power, sdr_power: sol.sdr_power, rank_one: all_rank_one }))
}

/// Lifted data of the RIS subproblem for fixed beams, per user, with the
/// noise power normalized to one.
#[derive(Debug, Clone)]
pub struct RisSdpBlocks {
    /// `[[H Ψ H^H, H Ψ h], [h^H Ψ H^H, h^H Ψ h]]`
    pub g_bar: Vec<CMat>,
    /// Same layout with `Ψ²`, so `Tr(G̃ θ̄θ̄^H) = ‖c Ψ‖²`.
    pub g_tilde: Vec<CMat>,
    /// `g·Tr Ψ` (θ-independent for unit-modulus phases).
    pub trace_term: Vec<f64>,
    /// `v·g·‖Ψ‖_F`.
    pub y_bar: Vec<f64>,
    /// `2√ln(1/ρ)·√(g/2)`, the weight of `‖c Ψ‖`.
    pub x_weight: Vec<f64>,
    pub y_weight: Vec<f64>,
}

pub fn ris_sdp_blocks(
    real: &ChannelRealization,
    s: &CMat,
    req: &Requirements,
) -> Result<RisSdpBlocks> {
    let m = real.n_ris();
    let mut out = RisSdpBlocks {
        g_bar: Vec::new(),
        g_tilde: Vec::new(),
        trace_term: Vec::new(),
        y_bar: Vec::new(),
        x_weight: Vec::new(),
        y_weight: Vec::new(),
    };
    for k in 0..real.n_users() {
        let sig = real.sigma2_com[k].sqrt();
        let h = &real.h_bu_hat[k] / c(sig, 0.0);
        let big_h = &real.h_bru_hat[k] / c(sig, 0.0);
        let psi_k = psi(s, k, req.rate[k]);
        let psi2 = &psi_k * &psi_k;
        let lift = |p: &CMat| -> CMat {
            let mut g = CMat::zeros(m + 1, m + 1);
            g.view_mut((0, 0), (m, m)).copy_from(&(&big_h * p * big_h.adjoint()));
            let col = &big_h * p * &h;
            g.view_mut((0, m), (m, 1)).copy_from(&col);
            g.view_mut((m, 0), (1, m)).copy_from(&col.adjoint());
            g[(m, m)] = (h.adjoint() * p * &h)[(0, 0)];
            crate::linalg::hermitian_part(&g)
        };
        let g = (real.gamma_bu[k].powi(2) + real.gamma_bru[k].powi(2) * m as f64) / real.sigma2_com[k];
        let l2 = 2.0 * req.chance.sqrt_log_rho(k);
        out.g_bar.push(lift(&psi_k));
        out.g_tilde.push(lift(&psi2));
        out.trace_term.push(g * re_trace(&psi_k));
        out.y_bar.push(req.chance.v[k] * g * frob(&psi_k));
        out.x_weight.push(l2 * (g / 2.0).sqrt());
        out.y_weight.push(l2);
    }
    Ok(out)
}

impl RisSdpBlocks {
    /// Normalized margin of user `k` at phases `theta` (exact, no lifting).
    pub fn margin(&self, k: usize, theta: &CVec) -> f64 {
        let tb = lift_phase(theta);
        let quad = (tb.adjoint() * &self.g_bar[k] * &tb)[(0, 0)].re;
        let w = (tb.adjoint() * &self.g_tilde[k] * &tb)[(0, 0)].re.max(0.0);
        self.trace_term[k] + quad - 1.0 - self.x_weight[k] * w.sqrt() - self.y_weight[k] * self.y_bar[k]
    }

    pub fn min_margin(&self, theta: &CVec) -> f64 {
        (0..self.g_bar.len()).map(|k| self.margin(k, theta)).fold(f64::INFINITY, f64::min)
    }
}

/// `θ̄ = [θ; 1]`.
pub fn lift_phase(theta: &CVec) -> CVec {
    let m = theta.len();
    let mut tb = CVec::zeros(m + 1);
    tb.rows_mut(0, m).copy_from(theta);
    tb[m] = c(1.0, 0.0);
    tb
}

#[derive(Debug, Clone)]
pub struct RisSdp {
    pub program: ConicProgram,
    pub theta_block: Block,
    pub margin_block: Block,
}

/// Lifted RIS problem `max Σ ᾱ_k` over `Θ̄ ⪰ 0, diag Θ̄ = 1`.
///
/// The term `−√(Tr G̃ Θ̄)` makes the printed margin non-concave in `Θ̄`, so
/// it is replaced by its tangent upper bound at the current phases,
/// `√w ≤ (w + w₀) / (2√w₀)`. The resulting constraint is linear and implies
/// the original one; it is tight at `Θ̄ = θ̄_cur θ̄_cur^H`.
pub fn build_ris_sdp(blocks: &RisSdpBlocks, theta_cur: &CVec) -> RisSdp {
    let m = theta_cur.len();
    let k_users = blocks.g_bar.len();
    let mut pb = ProgramBuilder::new();
    let tb = pb.add_block("theta_bar", Cone::Psd(2 * (m + 1)));
    let alpha = pb.add_block("alpha", Cone::NonNeg(k_users));
    for k in 0..k_users {
        pb.add_cost(alpha.col(k), -1.0);
    }
    for i in 0..=m {
        let mut e = CMat::zeros(m + 1, m + 1);
        e[(i, i)] = c(1.0, 0.0);
        pb.add_row(hermitian_functional(&e, &tb), 1.0);
    }
    let lifted = lift_phase(theta_cur);
    for k in 0..k_users {
        let w0 = (lifted.adjoint() * &blocks.g_tilde[k] * &lifted)[(0, 0)].re.max(1e-12);
        let kappa = blocks.x_weight[k] / (2.0 * w0.sqrt());
        let mat = &blocks.g_bar[k] - &blocks.g_tilde[k] * c(kappa, 0.0);
        let mut row = hermitian_functional(&mat, &tb);
        row.push((alpha.col(k), -1.0));
        let rhs = 1.0 - blocks.trace_term[k] + kappa * w0 + blocks.y_weight[k] * blocks.y_bar[k];
        pb.add_row(row, rhs);
    }
    RisSdp { program: pb.build(), theta_block: tb, margin_block: alpha }
}

/// Solves the RIS relaxation and returns the lifted Hermitian `Θ̄`.
pub fn solve_ris_sdp(sdp: &RisSdp, settings: &Settings) -> Result<Option<CMat>> {
    let sol = solve(&sdp.program, settings)?;
    if !usable(&sol) {
        return Ok(None);
    }
    Ok(Some(crate::linalg::hermitian_part(&unembed_hermitian(&sol.psd_block(&sdp.theta_block)))))
}

#[derive(Debug, Clone)]
pub struct RandomizationOutcome {
    pub theta: CVec,
    pub score: f64,
    /// `score ≥ 0`, i.e. every restriction holds at the returned phases.
    pub feasible: bool,
}

/// Draws `g_max` candidates `V Σ^{1/2} x` from the lifted solution,
/// normalizes by the auxiliary coordinate, projects to unit modulus and
/// keeps the one with the largest evaluator score.
pub fn gaussian_randomization<R, F>(
    theta_bar: &CMat,
    g_max: usize,
    evaluator: F,
    rng: &mut R,
) -> RandomizationOutcome
where
    R: Rng + ?Sized,
    F: Fn(&CVec) -> f64 + Sync,
{
    let dim = theta_bar.nrows();
    let m = dim - 1;
    let (vals, vecs) = herm_eig(theta_bar);
    let d = CVec::from_iterator(dim, vals.iter().map(|v| c(v.max(0.0).sqrt(), 0.0)));
    let factor = vecs * CMat::from_diagonal(&d);
    let candidates: Vec<CVec> = (0..g_max.max(1))
        .map(|_| {
            let draw = &factor * cscg_vec(rng, dim);
            let last = draw[m];
            let scaled = if last.norm() > 1e-300 { draw / last } else { draw };
            unit_modulus(&scaled.rows(0, m).into_owned())
        })
        .collect();
    let scores: Vec<f64> = candidates.par_iter().map(|t| evaluator(t)).collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    RandomizationOutcome {
        theta: candidates[best].clone(),
        score: scores[best],
        feasible: scores[best] >= 0.0,
    }
}

/// Phase alphabet `e^{j(2πi/d + π/d)}`, `i = 0..d`.
pub fn phase_alphabet(d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / d as f64 + PI / d as f64))
        .collect()
}

/// Nearest alphabet point per entry; ties go to the smaller index.
pub fn map_to_discrete(theta: &CVec, d: usize) -> CVec {
    let alphabet = phase_alphabet(d);
    theta.map(|z| {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, a) in alphabet.iter().enumerate() {
            let dist = (z - a).norm();
            if dist < best_d - 1e-12 {
                best = i;
                best_d = dist;
            }
        }
        alphabet[best]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::{check_constraints, ChanceParams};
    use crate::linalg::cscg_mat;
    use crate::metrics::BeamformerSet;
    use crate::scene::trial_rng;

    fn toy(n: usize, m: usize, k: usize, l: usize, err: f64, seed: u64) -> (ChannelRealization, Requirements) {
        let mut r = trial_rng(seed, 0);
        let real = ChannelRealization {
            h_bu_hat: (0..k).map(|_| cscg_vec(&mut r, n)).collect(),
            h_bru_hat: (0..k).map(|_| cscg_mat(&mut r, m, n) * c(0.3, 0.0)).collect(),
            alpha_hat: (0..l).map(|_| c(1.0, 0.5)).collect(),
            aod: (0..l).map(|i| -0.5 + 0.7 * i as f64).collect(),
            aoa: (0..l).map(|i| -0.5 + 0.7 * i as f64).collect(),
            gamma_bu: vec![err; k],
            gamma_bru: vec![err * 0.3; k],
            eps: vec![err; l],
            sigma2_com: vec![1.0; k],
            sigma2_sen: 1.0,
            n_rx: n,
        };
        let req = Requirements {
            rate: vec![1.0; k],
            crb: vec![0.5; l],
            chance: ChanceParams::new(vec![0.05; k], vec![0.05; l]).unwrap(),
        };
        (real, req)
    }

    fn transmit(real: &ChannelRealization, theta: &CVec, req: &Requirements) -> TransmitSolution {
        let TransmitBuild::Ready(sdp) = build_transmit_sdp(real, theta, req).unwrap() else { panic!() };
        solve_transmit_sdp(&sdp, &Settings::default()).unwrap().unwrap()
    }

    #[test]
    fn zero_error_single_user_is_mrt() {
        let (real, req) = toy(4, 3, 1, 0, 0.0, 1);
        let theta = unit_modulus(&cscg_vec(&mut trial_rng(2, 0), 3));
        let sol = transmit(&real, &theta, &req);
        let c_row = effective_channel(&real.h_bu_hat[0], &real.h_bru_hat[0], &theta);
        let want = req.sinr(0) * real.sigma2_com[0] / c_row.norm_squared();
        assert!((sol.sdr_power - want).abs() < 1e-6 * want);
        assert!(matches!(extract_rank_one(&sol.gammas[0], 1e-6).unwrap(), RankOne::Vector(_)));
    }

    #[test]
    fn robust_power_exceeds_nominal_and_recovery_is_feasible() {
        let (real, req) = toy(4, 3, 2, 1, 0.05, 3);
        let theta = unit_modulus(&cscg_vec(&mut trial_rng(4, 0), 3));
        let robust = transmit(&real, &theta, &req);
        let loose = Requirements {
            chance: ChanceParams::new(vec![0.999; 2], vec![0.05]).unwrap(),
            ..req.clone()
        };
        let nominal = transmit(&real, &theta, &loose);
        assert!(nominal.sdr_power <= robust.sdr_power * (1.0 + 1e-6));

        let out = solve_transmit(&real, &theta, &req, &robust, 1e-6, 50, &mut trial_rng(5, 0))
            .unwrap()
            .unwrap();
        assert!(out.power >= robust.sdr_power * (1.0 - 1e-6));
        let bf = BeamformerSet { s_tx: out.s.clone(), theta: theta.clone() };
        assert!(check_constraints(&real, &bf, &req).unwrap().feasible(1e-9));
    }

    #[test]
    fn sensing_infeasibility_is_typed() {
        let (mut real, req) = toy(3, 2, 1, 1, 0.0, 6);
        real.eps[0] = 10.0;
        let theta = CVec::from_element(2, c(1.0, 0.0));
        assert!(matches!(build_transmit_sdp(&real, &theta, &req).unwrap(), TransmitBuild::SensingInfeasible));
    }

    #[test]
    fn map_to_discrete_examples() {
        let q = Complex64::from_polar(1.0, PI / 4.0);
        let one = CVec::from_element(1, c(1.0, 0.0));
        assert!((map_to_discrete(&CVec::from_element(1, q), 4)[0] - q).norm() < 1e-12);
        assert!((map_to_discrete(&one, 4)[0] - q).norm() < 1e-12);
        let near = CVec::from_element(1, Complex64::from_polar(1.0, 0.1));
        assert!((map_to_discrete(&near, 4)[0] - q).norm() < 1e-12);
    }

    #[test]
    fn lifting_identity() {
        let (real, req) = toy(3, 4, 2, 0, 0.1, 7);
        let mut r = trial_rng(8, 0);
        let s = cscg_mat(&mut r, 3, 2);
        let theta = unit_modulus(&cscg_vec(&mut r, 4));
        let blocks = ris_sdp_blocks(&real, &s, &req).unwrap();
        let bf = BeamformerSet { s_tx: s, theta: theta.clone() };
        let report = check_constraints(&real, &bf, &req).unwrap();
        for k in 0..2 {
            assert!((blocks.margin(k, &theta) - report.comm[k]).abs() < 1e-10 * (1.0 + report.comm[k].abs()));
            let c_row = effective_channel(&real.h_bu_hat[k], &real.h_bru_hat[k], &theta);
            let tb = lift_phase(&theta);
            let lifted = crate::linalg::re_trace_prod(&blocks.g_bar[k], &(&tb * tb.adjoint()));
            let direct = (&c_row * psi(&bf.s_tx, k, req.rate[k]) * c_row.adjoint())[(0, 0)].re;
            assert!((lifted - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn single_element_relaxation_dominates_grid() {
        let (real, req) = toy(3, 1, 2, 0, 0.05, 9);
        let theta0 = CVec::from_element(1, c(1.0, 0.0));
        let sol = transmit(&real, &theta0, &req);
        let s = solve_transmit(&real, &theta0, &req, &sol, 1e-6, 50, &mut trial_rng(1, 1)).unwrap().unwrap().s;
        let blocks = ris_sdp_blocks(&real, &s, &req).unwrap();
        let sdp = build_ris_sdp(&blocks, &theta0);
        let res = solve(&sdp.program, &Settings::default()).unwrap();
        assert_eq!(res.status, Status::Optimal);
        let sdp_value = -res.primal_objective;
        // the tangent restriction evaluated on the rank-one grid
        let lifted0 = lift_phase(&theta0);
        let mut grid_best = f64::NEG_INFINITY;
        for step in 0..720 {
            let th = CVec::from_element(1, Complex64::from_polar(1.0, step as f64 * PI / 360.0));
            let tb = lift_phase(&th);
            let mut total = 0.0;
            let mut ok = true;
            for k in 0..2 {
                let w0 = (lifted0.adjoint() * &blocks.g_tilde[k] * &lifted0)[(0, 0)].re.max(1e-12);
                let w = (tb.adjoint() * &blocks.g_tilde[k] * &tb)[(0, 0)].re;
                let quad = (tb.adjoint() * &blocks.g_bar[k] * &tb)[(0, 0)].re;
                let a = blocks.trace_term[k] + quad - 1.0
                    - blocks.x_weight[k] * (w + w0) / (2.0 * w0.sqrt())
                    - blocks.y_weight[k] * blocks.y_bar[k];
                ok &= a >= 0.0;
                total += a;
            }
            if ok {
                grid_best = grid_best.max(total);
            }
        }
        assert!(sdp_value >= grid_best - 1e-6 * (1.0 + grid_best.abs()));
    }

    #[test]
    fn randomization_recovers_rank_one_and_is_monotone() {
        let mut r = trial_rng(10, 0);
        let theta = map_to_discrete(&unit_modulus(&cscg_vec(&mut r, 4)), 4);
        let tb = lift_phase(&theta);
        let lifted = &tb * tb.adjoint();
        let out = gaussian_randomization(&lifted, 5, |t| -(t - &theta).norm(), &mut r);
        // null-space eigenvalues of order 1e-16 enter through their square roots
        assert!(out.score > -1e-6, "{}", out.score);
        assert!(out.theta.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));

        let a = cscg_mat(&mut r, 5, 5);
        let noisy = &a * a.adjoint();
        let score = |t: &CVec| t[0].re + t[1].im;
        let one = gaussian_randomization(&noisy, 1, score, &mut trial_rng(11, 0));
        let many = gaussian_randomization(&noisy, 100, score, &mut trial_rng(11, 0));
        assert!(many.score >= one.score);
    }
}
