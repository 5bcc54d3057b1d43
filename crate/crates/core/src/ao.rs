//! Alternating minimization of transmit power: a transmit relaxation for
//! fixed phases, then a RIS update for fixed beams, until the power stalls.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chance::{check_constraints, Requirements};
use crate::conic::Settings;
use crate::error::{Error, Result};
use crate::gemm::{default_lambda, run_gemm, GemmConfig};
use crate::linalg::{CMat, CVec};
use crate::metrics::BeamformerSet;
use crate::scene::ChannelRealization;
use crate::sdr::{
    build_ris_sdp, build_transmit_sdp, gaussian_randomization, map_to_discrete, phase_alphabet,
    ris_sdp_blocks, solve_ris_sdp, solve_transmit, solve_transmit_sdp, TransmitBuild,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// RIS relaxation, randomization and discrete mapping every iteration.
    #[serde(rename = "sdr", alias = "sdr_scheme1")]
    Sdr,
    /// Square-penalty minorize-maximize update, then discrete mapping.
    #[serde(rename = "gemm", alias = "gemm_scheme2")]
    Gemm,
    /// RIS relaxation with unit-modulus but unquantized phases.
    #[serde(rename = "continuous", alias = "continuous_relaxation")]
    Continuous,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Sdr, Scheme::Gemm, Scheme::Continuous];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sdr => "sdr",
            Scheme::Gemm => "gemm",
            Scheme::Continuous => "continuous",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sdr" | "sdr_scheme1" => Ok(Scheme::Sdr),
            "gemm" | "gemm_scheme2" => Ok(Scheme::Gemm),
            "continuous" | "continuous_relaxation" => Ok(Scheme::Continuous),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoConfig {
    pub scheme: Scheme,
    pub i_max: usize,
    /// Stop once the power falls by less than this fraction of its previous
    /// value (or rises).
    pub epsilon: f64,
    pub g_max: usize,
    pub rank_tol: f64,
    pub solver_tol: f64,
    pub phase_levels: usize,
    /// GEMM penalty weight relative to the largest current margin.
    pub lambda_scale: f64,
    /// Penalty multiplier applied after every AO iteration; 1 keeps it fixed.
    pub lambda_growth: f64,
    pub gemm_iters: usize,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Sdr,
            i_max: 30,
            epsilon: 1e-3,
            g_max: 100,
            rank_tol: 1e-6,
            solver_tol: 1e-7,
            phase_levels: 4,
            lambda_scale: 10.0,
            lambda_growth: 1.0,
            gemm_iters: 100,
        }
    }
}

impl AoConfig {
    pub fn new(scheme: Scheme, phase_levels: usize) -> Self {
        Self { scheme, phase_levels, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.i_max == 0 || self.g_max == 0 || self.phase_levels == 0 {
            return Err(Error::Config("AO needs epsilon > 0, i_max ≥ 1, g_max ≥ 1, phase_levels ≥ 1".into()));
        }
        Ok(())
    }

    fn settings(&self) -> Settings {
        Settings { tol: self.solver_tol, ..Settings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoStatus {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoIteration {
    /// `‖S‖²_F` in watts after the transmit step.
    pub power_w: f64,
    /// Relaxation bound `Σ Tr Γ_k` of the same step.
    pub sdr_power_w: f64,
    pub rank_one: bool,
    pub feasible: bool,
    pub transmit_ms: f64,
    pub ris_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoTrace {
    pub scheme: Scheme,
    pub status: AoStatus,
    pub iterations: Vec<AoIteration>,
    /// Best beamformers found, as columns of `S`.
    pub s_best: Vec<Vec<Complex64>>,
    pub theta_best: Vec<Complex64>,
    pub best_power_w: Option<f64>,
    /// The best pair passed the direct constraint re-check.
    pub feasible: bool,
}

impl AoTrace {
    pub fn beamformers(&self) -> Option<BeamformerSet> {
        self.best_power_w?;
        let n = self.s_best.first().map_or(0, Vec::len);
        let cols: Vec<Complex64> = self.s_best.iter().flatten().copied().collect();
        Some(BeamformerSet {
            s_tx: CMat::from_column_slice(n, self.s_best.len(), &cols),
            theta: CVec::from_column_slice(&self.theta_best),
        })
    }

    /// Running minimum of the per-iteration power.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.iterations
            .iter()
            .map(|it| {
                best = best.min(it.power_w);
                best
            })
            .collect()
    }
}

/// Direct re-check tolerance on the noise-normalized margins.
pub const RECHECK_TOL: f64 = 1e-6;

/// Phase update for fixed beams. Returns `None` when the current phases
/// should be kept.
fn ris_step<R: Rng + ?Sized>(
    real: &ChannelRealization,
    req: &Requirements,
    s: &CMat,
    theta: &CVec,
    cfg: &AoConfig,
    iter: usize,
    rng: &mut R,
) -> Result<Option<CVec>> {
    let blocks = ris_sdp_blocks(real, s, req)?;
    let d = cfg.phase_levels;
    match cfg.scheme {
        Scheme::Sdr | Scheme::Continuous => {
            let sdp = build_ris_sdp(&blocks, theta);
            let Some(lifted) = solve_ris_sdp(&sdp, &cfg.settings())? else {
                return Ok(None);
            };
            if cfg.scheme == Scheme::Sdr {
                let out = gaussian_randomization(&lifted, cfg.g_max, |t| blocks.min_margin(&map_to_discrete(t, d)), rng);
                Ok(Some(map_to_discrete(&out.theta, d)))
            } else {
                let out = gaussian_randomization(&lifted, cfg.g_max, |t| blocks.min_margin(t), rng);
                // the current beams must stay feasible at the new phases,
                // otherwise the next power could exceed this one
                Ok((out.feasible && out.score >= blocks.min_margin(theta).min(0.0)).then_some(out.theta))
            }
        }
        Scheme::Gemm => {
            let lambda = default_lambda(&blocks, theta, cfg.lambda_scale) * cfg.lambda_growth.powi(iter as i32);
            let gcfg = GemmConfig::new(lambda, cfg.gemm_iters, d);
            let out = run_gemm(theta, &blocks, &gcfg);
            Ok(Some(map_to_discrete(&out.theta, d)))
        }
    }
}

struct TransmitStep {
    s: CMat,
    power: f64,
    sdr_power: f64,
    rank_one: bool,
}

fn transmit_step<R: Rng + ?Sized>(
    real: &ChannelRealization,
    req: &Requirements,
    theta: &CVec,
    cfg: &AoConfig,
    rng: &mut R,
) -> Result<Option<TransmitStep>> {
    let TransmitBuild::Ready(sdp) = build_transmit_sdp(real, theta, req)? else {
        return Ok(None);
    };
    let Some(sol) = solve_transmit_sdp(&sdp, &cfg.settings())? else {
        return Ok(None);
    };
    Ok(solve_transmit(real, theta, req, &sol, cfg.rank_tol, cfg.g_max, rng)?.map(|o| TransmitStep {
        s: o.s,
        power: o.power,
        sdr_power: o.sdr_power,
        rank_one: o.rank_one,
    }))
}

/// Random start with every phase drawn uniformly from the alphabet.
pub fn random_phases<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> CVec {
    let alphabet = phase_alphabet(d);
    CVec::from_fn(m, |_, _| alphabet[rng.random_range(0..d)])
}

pub fn run_ao<R: Rng + ?Sized>(
    real: &ChannelRealization,
    req: &Requirements,
    cfg: &AoConfig,
    rng: &mut R,
) -> Result<AoTrace> {
    cfg.validate()?;
    let mut theta = random_phases(real.n_ris(), cfg.phase_levels, rng);
    let mut iterations = Vec::new();
    let mut best: Option<(f64, CMat, CVec)> = None;
    let mut last_good: Option<(CMat, CVec)> = None;
    let mut retried = false;
    let mut status = AoStatus::MaxIter;

    for iter in 0..cfg.i_max {
        let t0 = Instant::now();
        let step = transmit_step(real, req, &theta, cfg, rng)?;
        let transmit_ms = t0.elapsed().as_secs_f64() * 1e3;
        let Some(step) = step else {
            match &last_good {
                None => {
                    status = AoStatus::Infeasible;
                    break;
                }
                Some((s_prev, theta_prev)) if !retried => {
                    // the new phases broke feasibility; redraw them once
                    retried = true;
                    let (s_prev, theta_prev) = (s_prev.clone(), theta_prev.clone());
                    match ris_step(real, req, &s_prev, &theta_prev, cfg, iter, rng)? {
                        Some(t) => theta = t,
                        None => {
                            status = AoStatus::Converged;
                            break;
                        }
                    }
                    continue;
                }
                Some(_) => {
                    status = AoStatus::Converged;
                    break;
                }
            }
        };

        let prev = iterations.last().map(|it: &AoIteration| it.power_w);
        let t1 = Instant::now();
        let converged = prev.is_some_and(|p| p - step.power < cfg.epsilon * p);
        if best.as_ref().is_none_or(|(p, _, _)| step.power < *p) {
            best = Some((step.power, step.s.clone(), theta.clone()));
        }
        last_good = Some((step.s.clone(), theta.clone()));
        let mut next = None;
        if !converged && real.n_ris() > 0 && iter + 1 < cfg.i_max {
            next = ris_step(real, req, &step.s, &theta, cfg, iter, rng)?;
        }
        iterations.push(AoIteration {
            power_w: step.power,
            sdr_power_w: step.sdr_power,
            rank_one: step.rank_one,
            feasible: true,
            transmit_ms,
            ris_ms: t1.elapsed().as_secs_f64() * 1e3,
        });
        if converged || real.n_ris() == 0 {
            status = AoStatus::Converged;
            break;
        }
        match next {
            Some(t) => theta = t,
            None if iter + 1 < cfg.i_max => {
                status = AoStatus::Converged;
                break;
            }
            None => {}
        }
    }

    let (s_best, theta_best, best_power_w, feasible) = match &best {
        Some((p, s, t)) => {
            let bf = BeamformerSet { s_tx: s.clone(), theta: t.clone() };
            let ok = check_constraints(real, &bf, req)?.feasible(RECHECK_TOL);
            let cols = (0..s.ncols()).map(|k| s.column(k).iter().copied().collect()).collect();
            (cols, t.iter().copied().collect(), Some(*p), ok)
        }
        None => (Vec::new(), Vec::new(), None, false),
    };
    if best.is_none() {
        status = AoStatus::Infeasible;
    }
    Ok(AoTrace { scheme: cfg.scheme, status, iterations, s_best, theta_best, best_power_w, feasible })
}

/// The AO run ends with a re-validated feasible pair.
pub fn feasibility<R: Rng + ?Sized>(
    real: &ChannelRealization,
    req: &Requirements,
    cfg: &AoConfig,
    rng: &mut R,
) -> Result<bool> {
    let trace = run_ao(real, req, cfg, rng)?;
    Ok(trace.status != AoStatus::Infeasible && trace.feasible)
}
