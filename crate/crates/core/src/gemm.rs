//! Square-penalty RIS update: maximize the summed robust margin plus
//! `λ‖θ‖²` over the convex hull of the phase alphabet by minorize-maximize,
//! taking one accelerated projected-gradient step per outer iteration.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::{c, CVec};
use crate::sdr::{lift_phase, RisSdpBlocks};

/// Objective without the penalty: `Σ_k margin_k(θ)` with the error power
/// frozen at its unit-modulus value.
fn data_objective(blocks: &RisSdpBlocks, theta: &CVec) -> f64 {
    (0..blocks.g_bar.len()).map(|k| blocks.margin(k, theta)).sum()
}

/// `Σ_k margin_k(θ) + λ‖θ‖²`.
pub fn sp_objective(blocks: &RisSdpBlocks, theta: &CVec, lambda: f64) -> f64 {
    data_objective(blocks, theta) + lambda * theta.norm_squared()
}

/// The penalty linearized at `theta_tilde`; a lower bound on
/// [`sp_objective`] that touches it at `theta = theta_tilde`.
pub fn minorant(blocks: &RisSdpBlocks, theta: &CVec, theta_tilde: &CVec, lambda: f64) -> f64 {
    let lin = theta_tilde.norm_squared() + 2.0 * theta_tilde.dotc(&(theta - theta_tilde)).re;
    data_objective(blocks, theta) + lambda * lin
}

/// Gradient of the minorant anchored at `theta_iter`, evaluated at `z`, in
/// the `2·∂/∂θ*` convention: `f(z + d) ≈ f(z) + Re(∇^H d)`.
///
/// Where `‖c Ψ_k‖` vanishes the zero subgradient of the norm is used.
pub fn gradient(blocks: &RisSdpBlocks, z: &CVec, theta_iter: &CVec, lambda: f64) -> CVec {
    let m = z.len();
    let zb = lift_phase(z);
    let mut g = theta_iter * c(2.0 * lambda, 0.0);
    for k in 0..blocks.g_bar.len() {
        let quad = &blocks.g_bar[k] * &zb;
        g += quad.rows(0, m) * c(2.0, 0.0);
        let sq = &blocks.g_tilde[k] * &zb;
        let w = zb.dotc(&sq).re;
        if w > 1e-24 {
            g -= sq.rows(0, m) * c(blocks.x_weight[k] / w.sqrt(), 0.0);
        }
    }
    g
}

/// Maps each entry into the polygon spanned by the alphabet: rotate into
/// its sector, clamp to the sector's edge, rotate back.
pub fn project_polygon(theta: &CVec, d: usize) -> CVec {
    if d < 2 {
        return theta.map(|_| c(-1.0, 0.0));
    }
    let half = PI / d as f64;
    let (cos_h, sin_h) = (half.cos(), half.sin());
    theta.map(|t| {
        let n = ((t.arg() + half) / (2.0 * half)).floor();
        let rot = Complex64::from_polar(1.0, 2.0 * half * n);
        let local = t / rot;
        rot * c(local.re.clamp(0.0, cos_h), local.im.clamp(-sin_h, sin_h))
    })
}

/// Every entry lies in the alphabet's convex hull up to `slack`.
pub fn in_hull(theta: &CVec, d: usize, slack: f64) -> bool {
    let half = PI / d as f64;
    theta.iter().all(|t| {
        (0..d).all(|i| (t * Complex64::from_polar(1.0, -2.0 * half * i as f64)).re <= half.cos() + slack)
    })
}

/// Penalty weight `scale · max_k |s_k|`, where `s_k` is user `k`'s
/// noise-normalized robust margin at `theta`.
pub fn default_lambda(blocks: &RisSdpBlocks, theta: &CVec, scale: f64) -> f64 {
    let peak = (0..blocks.g_bar.len()).map(|k| blocks.margin(k, theta).abs()).fold(0.0, f64::max);
    scale * peak
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GemmConfig {
    pub lambda: f64,
    pub i_max: usize,
    pub phase_levels: usize,
    /// Initial curvature guess; the step is `1/β`.
    pub beta0: f64,
    pub beta_cap: f64,
    /// Stop once an accepted step raises the objective by less than this
    /// relative amount.
    pub tol: f64,
}

impl GemmConfig {
    pub fn new(lambda: f64, i_max: usize, phase_levels: usize) -> Self {
        Self { lambda, i_max, phase_levels, beta0: 1.0, beta_cap: (1u64 << 20) as f64, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct GemmState {
    pub theta_cur: CVec,
    pub theta_prev: CVec,
    pub xi: f64,
    pub iter: usize,
    pub lambda: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct GemmResult {
    pub theta: CVec,
    /// `sp_objective` of the start point and of every accepted iterate.
    pub objective: Vec<f64>,
    pub iterations: usize,
    /// The ascent condition failed even at the smallest step.
    pub stalled: bool,
}

/// One backtracked projected-gradient step of the minorant anchored at
/// `anchor`, taken from `z`. Returns the new point and the final `β`.
fn apg_step(
    blocks: &RisSdpBlocks,
    z: &CVec,
    anchor: &CVec,
    cfg: &GemmConfig,
) -> Option<(CVec, f64)> {
    let grad = gradient(blocks, z, anchor, cfg.lambda);
    let fz = minorant(blocks, z, anchor, cfg.lambda);
    let mut beta = cfg.beta0;
    while beta <= cfg.beta_cap {
        let cand = project_polygon(&(z + &grad * c(1.0 / beta, 0.0)), cfg.phase_levels);
        let d = &cand - z;
        let model = fz + grad.dotc(&d).re - 0.5 * beta * d.norm_squared();
        if minorant(blocks, &cand, anchor, cfg.lambda) >= model {
            return Some((cand, beta));
        }
        beta *= 2.0;
    }
    None
}

/// Runs the accelerated minorize-maximize iteration from `init` and returns
/// the best iterate. When the extrapolated step fails to improve the
/// objective the iteration restarts from the current point without momentum,
/// so accepted objectives never decrease.
pub fn run_gemm(init: &CVec, blocks: &RisSdpBlocks, cfg: &GemmConfig) -> GemmResult {
    let d = cfg.phase_levels;
    let start = project_polygon(init, d);
    let mut st = GemmState {
        theta_cur: start.clone(),
        theta_prev: start.clone(),
        xi: 0.0,
        iter: 0,
        lambda: cfg.lambda,
        beta: cfg.beta0,
    };
    let mut obj = sp_objective(blocks, &start, cfg.lambda);
    let mut trace = vec![obj];
    let mut stalled = false;
    let mut xi_prev = 0.0_f64;
    while st.iter < cfg.i_max {
        st.xi = 0.5 * (1.0 + (1.0 + 4.0 * xi_prev * xi_prev).sqrt());
        let alpha = (xi_prev - 1.0) / st.xi;
        let z = &st.theta_cur + (&st.theta_cur - &st.theta_prev) * c(alpha, 0.0);
        let z = project_polygon(&z, d);
        let mut next = apg_step(blocks, &z, &st.theta_cur, cfg)
            .filter(|(t, _)| sp_objective(blocks, t, cfg.lambda) >= obj);
        if next.is_none() {
            xi_prev = 0.0;
            next = apg_step(blocks, &st.theta_cur, &st.theta_cur, cfg);
        } else {
            xi_prev = st.xi;
        }
        let Some((cand, beta)) = next else {
            stalled = true;
            break;
        };
        let new_obj = sp_objective(blocks, &cand, cfg.lambda);
        st.iter += 1;
        st.beta = beta;
        if new_obj < obj {
            // only reachable through rounding in the restart step
            stalled = true;
            break;
        }
        st.theta_prev = std::mem::replace(&mut st.theta_cur, cand);
        let gain = new_obj - obj;
        obj = new_obj;
        trace.push(obj);
        if gain <= cfg.tol * obj.abs().max(1.0) {
            break;
        }
    }
    GemmResult { theta: st.theta_cur, objective: trace, iterations: st.iter, stalled }
}
