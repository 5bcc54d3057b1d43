//! System geometry, channel sampling and the Gaussian CSI error model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, dims, Error, Result};
use crate::linalg::{c, cscg, cscg_mat, cscg_vec, dbm_to_watts, CMat, CVec};

/// A disc in the plane, used for user and target placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// How the configured error magnitudes `err_bu`, `err_bru` and `err_rc`
/// translate into the per-entry error standard deviations of a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// The configured value is the per-entry standard deviation itself.
    Absolute,
    /// Scaled by the root-mean-square entry of the estimated channel.
    RelativeEntry,
    /// Scaled by the norm of the estimated channel (Frobenius for matrices).
    RelativeNorm,
}

/// Rician factor; `f64::INFINITY` means a deterministic line-of-sight link.
/// Encoded in JSON as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFactor(pub f64);

impl Serialize for RicianFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for RicianFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(RicianFactor(v)),
            Raw::Text(t) if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity") => {
                Ok(RicianFactor(f64::INFINITY))
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad rician factor {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    /// Receive antennas; `None` means the same as `n_tx`.
    pub n_rx: Option<usize>,
    pub n_ris: usize,
    pub n_users: usize,
    pub n_targets: usize,
    pub phase_levels: usize,
    /// If set, overrides `phase_levels` with `2^phase_bits`.
    pub phase_bits: Option<u32>,
    pub rate_threshold_bps_hz: f64,
    pub crb_threshold: f64,
    pub outage_prob: f64,
    pub fail_prob: f64,
    pub noise_com_dbm: f64,
    pub noise_sen_dbm: f64,
    pub err_bu: f64,
    pub err_bru: f64,
    pub err_rc: f64,
    pub error_model: ErrorModel,
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub user_circle: Circle,
    pub target_circle: Circle,
    pub rician_bu: RicianFactor,
    pub rician_ru: RicianFactor,
    pub rician_br: RicianFactor,
    pub pathloss_bu: f64,
    pub pathloss_ru: f64,
    pub pathloss_br: f64,
    pub wavelength_m: f64,
    pub rcs_m2: f64,
    /// Number of radar snapshots; the sensing noise power is divided by it.
    pub n_samples: usize,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_tx: 16,
            n_rx: None,
            n_ris: 32,
            n_users: 2,
            n_targets: 2,
            phase_levels: 4,
            phase_bits: None,
            rate_threshold_bps_hz: 2.0,
            crb_threshold: 0.01,
            outage_prob: 0.05,
            fail_prob: 0.05,
            noise_com_dbm: -110.0,
            noise_sen_dbm: -110.0,
            err_bu: 0.01,
            err_bru: 0.01,
            err_rc: 0.01,
            error_model: ErrorModel::RelativeNorm,
            bs_pos: [0.0, 0.0],
            ris_pos: [50.0, 10.0],
            user_circle: Circle { center: [70.0, 0.0], radius: 5.0 },
            target_circle: Circle { center: [0.0, 0.0], radius: 70.0 },
            rician_bu: RicianFactor(0.0),
            rician_ru: RicianFactor(0.0),
            rician_br: RicianFactor(f64::INFINITY),
            pathloss_bu: 4.0,
            pathloss_ru: 2.0,
            pathloss_br: 2.2,
            wavelength_m: 0.06,
            rcs_m2: 1.0,
            n_samples: 1,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx.unwrap_or(self.n_tx)
    }

    pub fn levels(&self) -> usize {
        match self.phase_bits {
            Some(b) => 1usize << b,
            None => self.phase_levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_tx == 0 || self.n_rx() == 0 || self.n_users == 0 {
            return bad("antenna and user counts must be at least 1");
        }
        // M = 0 (no surface) and L = 0 (no targets) are accepted as
        // degenerate cases; they are useful as closed-form checks.
        if self.levels() < 2 {
            return bad("phase alphabet needs at least 2 levels");
        }
        if matches!(self.phase_bits, Some(b) if b > 16) {
            return bad("phase_bits too large");
        }
        for (name, p) in [("outage_prob", self.outage_prob), ("fail_prob", self.fail_prob)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.rate_threshold_bps_hz > 0.0) || !(self.crb_threshold > 0.0) {
            return bad("thresholds must be positive");
        }
        if [self.err_bu, self.err_bru, self.err_rc].iter().any(|e| !(*e >= 0.0)) {
            return bad("error scales must be non-negative");
        }
        for r in [self.rician_bu, self.rician_ru, self.rician_br] {
            if !(r.0 >= 0.0) {
                return bad("rician factors must be non-negative");
            }
        }
        if !(self.wavelength_m > 0.0) || !(self.rcs_m2 > 0.0) || self.n_samples == 0 {
            return bad("wavelength, rcs and n_samples must be positive");
        }
        if !(self.user_circle.radius >= 0.0) || !(self.target_circle.radius >= 0.0) {
            return bad("circle radii must be non-negative");
        }
        Ok(())
    }
}

/// One Monte Carlo trial: channel estimates, error scales and target angles.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_bu_hat: Vec<CVec>,
    /// Cascaded BS-RIS-user channels, each M x N.
    pub h_bru_hat: Vec<CMat>,
    pub alpha_hat: Vec<Complex64>,
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
    pub gamma_bu: Vec<f64>,
    pub gamma_bru: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma2_com: Vec<f64>,
    pub sigma2_sen: f64,
    pub n_rx: usize,
}

impl ChannelRealization {
    pub fn n_tx(&self) -> usize {
        self.h_bu_hat.first().map_or(0, |h| h.len())
    }

    pub fn n_ris(&self) -> usize {
        self.h_bru_hat.first().map_or(0, |h| h.nrows())
    }

    pub fn n_users(&self) -> usize {
        self.h_bu_hat.len()
    }

    pub fn n_targets(&self) -> usize {
        self.alpha_hat.len()
    }

    /// Aggregate error power `γ²_BU + γ²_BRU·M` seen by user `k`.
    pub fn error_power(&self, k: usize) -> f64 {
        self.gamma_bu[k].powi(2) + self.gamma_bru[k].powi(2) * self.n_ris() as f64
    }

    /// Copy with every error scale multiplied by `factor`.
    pub fn with_error_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.gamma_bu.iter_mut().for_each(|g| *g *= factor);
        out.gamma_bru.iter_mut().for_each(|g| *g *= factor);
        out.eps.iter_mut().for_each(|g| *g *= factor);
        out
    }
}

/// Additive errors for one draw around a realization.
#[derive(Debug, Clone)]
pub struct ErrorDraw {
    pub dh_bu: Vec<CVec>,
    pub dh_bru: Vec<CMat>,
    pub dalpha: Vec<Complex64>,
}

pub fn pathloss_db(distance_m: f64, exponent: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return domain(format!("distance must be positive, got {distance_m}"));
    }
    Ok(-30.0 - 10.0 * exponent * distance_m.log10())
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn steering_tx(angle: f64, n: usize) -> CVec {
    let s = angle.sin();
    CVec::from_fn(n, |i, _| Complex64::from_polar(1.0, PI * i as f64 * s))
}

pub fn steering_rx(angle: f64, n_rx: usize) -> CVec {
    steering_tx(angle, n_rx)
}

pub fn steering_tx_deriv(angle: f64, n: usize) -> CVec {
    let a = steering_tx(angle, n);
    let k = PI * angle.cos();
    CVec::from_fn(n, |i, _| c(0.0, k * i as f64) * a[i])
}

pub fn steering_rx_deriv(angle: f64, n_rx: usize) -> CVec {
    steering_tx_deriv(angle, n_rx)
}

/// `scale·(√(β/(1+β))·LoS + √(1/(1+β))·NLoS)` with a fresh Rayleigh part.
pub fn sample_rician<R: Rng + ?Sized>(
    los: &CMat,
    rician_factor: f64,
    scale: f64,
    rng: &mut R,
) -> Result<CMat> {
    if !(rician_factor >= 0.0) {
        return domain(format!("rician factor must be >= 0, got {rician_factor}"));
    }
    if !(scale >= 0.0) {
        return domain(format!("scale must be >= 0, got {scale}"));
    }
    if rician_factor.is_infinite() {
        return Ok(los * c(scale, 0.0));
    }
    let w_los = (rician_factor / (1.0 + rician_factor)).sqrt();
    let w_nlos = (1.0 / (1.0 + rician_factor)).sqrt();
    let nlos = cscg_mat(rng, los.nrows(), los.ncols());
    Ok((los * c(w_los, 0.0) + nlos * c(w_nlos, 0.0)) * c(scale, 0.0))
}

/// `diag(h_ru)^H · H_BR^H`, an M x N matrix such that `θ^H·result` is the
/// reflected part of the effective channel.
pub fn cascade(h_ru: &CVec, h_br: &CMat) -> Result<CMat> {
    let m = h_ru.len();
    if h_br.ncols() != m {
        return dims(format!("h_ru has {m} entries but H_BR has {} columns", h_br.ncols()));
    }
    let mut out = h_br.adjoint();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= h_ru[i].conj();
    }
    Ok(out)
}

pub fn sample_target_coeff<R: Rng + ?Sized>(
    distance_m: f64,
    wavelength_m: f64,
    rcs_m2: f64,
    rng: &mut R,
) -> Result<Complex64> {
    Ok(cscg(rng) * target_coeff_scale(distance_m, wavelength_m, rcs_m2)?)
}

/// Standard deviation `√(λ²κ / (64π³d⁴))` of the reflection coefficient.
pub fn target_coeff_scale(distance_m: f64, wavelength_m: f64, rcs_m2: f64) -> Result<f64> {
    if !(distance_m > 0.0 && wavelength_m > 0.0 && rcs_m2 > 0.0) {
        return domain("distance, wavelength and rcs must be positive");
    }
    Ok((wavelength_m.powi(2) * rcs_m2 / (64.0 * PI.powi(3) * distance_m.powi(4))).sqrt())
}

pub fn sample_errors<R: Rng + ?Sized>(real: &ChannelRealization, rng: &mut R) -> ErrorDraw {
    let dh_bu = real
        .h_bu_hat
        .iter()
        .zip(&real.gamma_bu)
        .map(|(h, &g)| cscg_vec(rng, h.len()) * c(g, 0.0))
        .collect();
    let dh_bru = real
        .h_bru_hat
        .iter()
        .zip(&real.gamma_bru)
        .map(|(h, &g)| cscg_mat(rng, h.nrows(), h.ncols()) * c(g, 0.0))
        .collect();
    let dalpha = real.eps.iter().map(|&e| cscg(rng) * e).collect();
    ErrorDraw { dh_bu, dh_bru, dalpha }
}

/// Deterministic per-trial generator: `seed` selects the key, `stream` the
/// independent sequence (trial index, worker, ...).
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_in_circle<R: Rng + ?Sized>(circle: &Circle, rng: &mut R) -> [f64; 2] {
    let r = circle.radius * rng.random::<f64>().sqrt();
    let a = 2.0 * PI * rng.random::<f64>();
    [circle.center[0] + r * a.cos(), circle.center[1] + r * a.sin()]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    // positions closer than 1 m are clamped so path loss stays bounded
    ((a[0] - b[0]).hypot(a[1] - b[1])).max(1.0)
}

/// Angle seen by the BS array, which lies along the y-axis.
fn bs_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    let d = (to[0] - from[0]).hypot(to[1] - from[1]);
    if d == 0.0 {
        return 0.0;
    }
    ((to[1] - from[1]) / d).clamp(-1.0, 1.0).asin()
}

/// Angle seen by the RIS array, which lies along the x-axis.
fn ris_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    let d = (to[0] - from[0]).hypot(to[1] - from[1]);
    if d == 0.0 {
        return 0.0;
    }
    ((to[0] - from[0]) / d).clamp(-1.0, 1.0).asin()
}

fn error_std(model: ErrorModel, err: f64, estimate: &[Complex64]) -> f64 {
    let n = estimate.len().max(1) as f64;
    let energy: f64 = estimate.iter().map(|z| z.norm_sqr()).sum();
    match model {
        ErrorModel::Absolute => err,
        ErrorModel::RelativeEntry => err * (energy / n).sqrt(),
        ErrorModel::RelativeNorm => err * energy.sqrt(),
    }
}

/// Draws user/target positions and all estimated channels for one trial.
///
/// Every component draws from its own generator seeded up front, so two
/// configurations that differ only in array sizes see the same positions
/// and target coefficients, and their Rayleigh vectors share a prefix.
pub fn sample_realization<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    let (n, m, n_rx) = (cfg.n_tx, cfg.n_ris, cfg.n_rx());
    let bs = cfg.bs_pos;
    let ris = cfg.ris_pos;
    let mut sub = || ChaCha8Rng::seed_from_u64(rng.random());
    let (mut geo, mut targets, mut br) = (sub(), sub(), sub());
    let mut users: Vec<(ChaCha8Rng, ChaCha8Rng)> = (0..cfg.n_users).map(|_| (sub(), sub())).collect();

    let user_pos: Vec<[f64; 2]> = (0..cfg.n_users).map(|_| sample_in_circle(&cfg.user_circle, &mut geo)).collect();
    let target_pos: Vec<[f64; 2]> =
        (0..cfg.n_targets).map(|_| sample_in_circle(&cfg.target_circle, &mut geo)).collect();

    let d_br = dist(bs, ris);
    let los_br = steering_tx(bs_angle(bs, ris), n) * steering_tx(ris_angle(ris, bs), m).adjoint();
    let amp_br = db_to_amplitude(pathloss_db(d_br, cfg.pathloss_br)?);
    let h_br = sample_rician(&los_br, cfg.rician_br.0, amp_br, &mut br)?;

    let mut h_bu_hat = Vec::with_capacity(cfg.n_users);
    let mut h_bru_hat = Vec::with_capacity(cfg.n_users);
    let mut gamma_bu = Vec::with_capacity(cfg.n_users);
    let mut gamma_bru = Vec::with_capacity(cfg.n_users);
    for (&u, (bu_rng, ru_rng)) in user_pos.iter().zip(users.iter_mut()) {
        let d_bu = dist(bs, u);
        let los_bu = CMat::from_column_slice(n, 1, steering_tx(bs_angle(bs, u), n).as_slice());
        let amp_bu = db_to_amplitude(pathloss_db(d_bu, cfg.pathloss_bu)?);
        let h_bu = CVec::from_column_slice(
            sample_rician(&los_bu, cfg.rician_bu.0, amp_bu, bu_rng)?.as_slice(),
        );

        let d_ru = dist(ris, u);
        let los_ru = CMat::from_column_slice(m, 1, steering_tx(ris_angle(ris, u), m).as_slice());
        let amp_ru = db_to_amplitude(pathloss_db(d_ru, cfg.pathloss_ru)?);
        let h_ru = CVec::from_column_slice(
            sample_rician(&los_ru, cfg.rician_ru.0, amp_ru, ru_rng)?.as_slice(),
        );
        let h_bru = cascade(&h_ru, &h_br)?;

        gamma_bu.push(error_std(cfg.error_model, cfg.err_bu, h_bu.as_slice()));
        gamma_bru.push(error_std(cfg.error_model, cfg.err_bru, h_bru.as_slice()));
        h_bu_hat.push(h_bu);
        h_bru_hat.push(h_bru);
    }

    let mut alpha_hat = Vec::with_capacity(cfg.n_targets);
    let mut aod = Vec::with_capacity(cfg.n_targets);
    let mut eps = Vec::with_capacity(cfg.n_targets);
    for &t in &target_pos {
        let angle = bs_angle(bs, t);
        let alpha = sample_target_coeff(dist(ris, t), cfg.wavelength_m, cfg.rcs_m2, &mut targets)?;
        eps.push(error_std(cfg.error_model, cfg.err_rc, &[alpha]));
        aod.push(angle);
        alpha_hat.push(alpha);
    }

    Ok(ChannelRealization {
        h_bu_hat,
        h_bru_hat,
        alpha_hat,
        aoa: aod.clone(),
        aod,
        gamma_bu,
        gamma_bru,
        eps,
        sigma2_com: vec![dbm_to_watts(cfg.noise_com_dbm); cfg.n_users],
        sigma2_sen: dbm_to_watts(cfg.noise_sen_dbm) / cfg.n_samples as f64,
        n_rx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rng() -> ChaCha8Rng {
        trial_rng(7, 0)
    }

    #[test]
    fn pathloss_examples() {
        assert_eq!(pathloss_db(1.0, 4.0).unwrap(), -30.0);
        assert_relative_eq!(pathloss_db(50.0, 2.2).unwrap(), -30.0 - 22.0 * 50f64.log10());
        assert!((pathloss_db(50.0, 2.2).unwrap() + 67.377).abs() < 1e-3);
        assert!((pathloss_db(70.0, 4.0).unwrap() + 103.804).abs() < 1e-3);
        assert!(pathloss_db(0.0, 2.0).is_err());
    }

    #[test]
    fn steering_examples() {
        assert!(steering_tx(0.0, 4).iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        let a = steering_tx(PI / 2.0, 2);
        assert!((a[1] - c(-1.0, 0.0)).norm() < 1e-12);
        let a = steering_tx(PI / 6.0, 3);
        assert!((a[1] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((a[2] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_deriv_examples() {
        let d = steering_tx_deriv(0.0, 3);
        assert_eq!(d[0], c(0.0, 0.0));
        assert!((d[1] - c(0.0, PI)).norm() < 1e-12);
        assert!((d[2] - c(0.0, 2.0 * PI)).norm() < 1e-12);
        assert!(steering_tx_deriv(PI / 2.0, 3).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn rician_los_limit_is_exact() {
        let ones = CMat::from_element(3, 2, c(1.0, 0.0));
        let h = sample_rician(&ones, f64::INFINITY, 1.0, &mut rng()).unwrap();
        assert_eq!(h, ones);
        assert!(sample_rician(&ones, -1.0, 1.0, &mut rng()).is_err());
    }

    #[test]
    fn rician_moments() {
        let mut r = rng();
        let one = CMat::from_element(1, 1, c(1.0, 0.0));
        let n = 100_000;
        let (mut var0, mut mean1) = (0.0, c(0.0, 0.0));
        for _ in 0..n {
            var0 += sample_rician(&one, 0.0, 2.0, &mut r).unwrap()[(0, 0)].norm_sqr();
            mean1 += sample_rician(&one, 1.0, 1.0, &mut r).unwrap()[(0, 0)];
        }
        assert!((var0 / n as f64 / 4.0 - 1.0).abs() < 0.05);
        assert!(((mean1 / n as f64).re / 0.5f64.sqrt() - 1.0).abs() < 0.05);
    }

    #[test]
    fn cascade_examples() {
        let m = 3;
        let id = CMat::identity(m, m);
        let ones = CVec::from_element(m, c(1.0, 0.0));
        assert_eq!(cascade(&ones, &id).unwrap(), id);

        let mut r = rng();
        let h_br = cscg_mat(&mut r, 4, m);
        let mut e1 = CVec::zeros(m);
        e1[0] = c(1.0, 0.0);
        let g = cascade(&e1, &h_br).unwrap();
        for j in 0..4 {
            assert_eq!(g[(0, j)], h_br[(j, 0)].conj());
            assert_eq!(g[(1, j)], c(0.0, 0.0));
        }
        assert!(cascade(&e1, &cscg_mat(&mut r, 4, m + 1)).is_err());
    }

    #[test]
    fn cascade_reflected_path_identity() {
        let mut r = rng();
        for _ in 0..100 {
            let (n, m) = (3, 4);
            let h_ru = cscg_vec(&mut r, m);
            let h_br = cscg_mat(&mut r, n, m);
            let theta = cscg_vec(&mut r, m);
            let s = cscg_vec(&mut r, n);
            let lhs = (theta.adjoint() * cascade(&h_ru, &h_br).unwrap() * &s)[(0, 0)];
            let diag_theta_h = CMat::from_diagonal(&theta).adjoint();
            let rhs = (h_ru.adjoint() * diag_theta_h * h_br.adjoint() * &s)[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        }
    }

    fn small_realization(g: f64) -> ChannelRealization {
        ChannelRealization {
            h_bu_hat: vec![CVec::zeros(2)],
            h_bru_hat: vec![CMat::zeros(3, 2)],
            alpha_hat: vec![c(1.0, 0.0)],
            aod: vec![0.1],
            aoa: vec![0.1],
            gamma_bu: vec![g],
            gamma_bru: vec![g],
            eps: vec![g],
            sigma2_com: vec![1.0],
            sigma2_sen: 1.0,
            n_rx: 2,
        }
    }

    #[test]
    fn zero_scales_give_zero_errors() {
        let e = sample_errors(&small_realization(0.0), &mut rng());
        assert!(e.dh_bu[0].iter().all(|z| z.norm() == 0.0));
        assert!(e.dh_bru[0].iter().all(|z| z.norm() == 0.0));
        assert_eq!(e.dalpha[0], c(0.0, 0.0));
    }

    #[test]
    fn error_moments() {
        let real = small_realization(0.01);
        let mut r = rng();
        let n = 100_000;
        let (mut v_bu, mut v_re, mut v_im) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let e = sample_errors(&real, &mut r);
            v_bu += e.dh_bu[0][0].norm_sqr();
            v_re += e.dalpha[0].re.powi(2);
            v_im += e.dalpha[0].im.powi(2);
        }
        let n = n as f64;
        assert!((v_bu / n / 1e-4 - 1.0).abs() < 0.05);
        assert!((v_re / n / 0.5e-4 - 1.0).abs() < 0.05);
        assert!((v_im / n / 0.5e-4 - 1.0).abs() < 0.05);
    }

    #[test]
    fn target_coeff_moments_and_scaling() {
        let (d, lam, k) = (40.0, 0.06, 1.0);
        let sd = target_coeff_scale(d, lam, k).unwrap();
        assert_relative_eq!(target_coeff_scale(2.0 * d, lam, k).unwrap() / sd, 0.25, epsilon = 1e-14);
        let mut r = rng();
        let n = 100_000;
        let (mut p, mut mean) = (0.0, c(0.0, 0.0));
        for _ in 0..n {
            let a = sample_target_coeff(d, lam, k, &mut r).unwrap();
            p += a.norm_sqr();
            mean += a;
        }
        assert!(((p / n as f64).sqrt() / sd - 1.0).abs() < 0.05);
        assert!((mean / n as f64).norm() < 0.05 * sd);
        assert!(sample_target_coeff(0.0, lam, k, &mut r).is_err());
    }

    #[test]
    fn realization_is_reproducible() {
        let cfg = ScenarioConfig { n_ris: 4, n_tx: 4, ..Default::default() };
        let a = sample_realization(&cfg, &mut trial_rng(11, 3)).unwrap();
        let b = sample_realization(&cfg, &mut trial_rng(11, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h_bru_hat[0].shape(), (4, 4));
        assert!(a.aod.iter().all(|x| x.abs() < PI / 2.0));
    }

    #[test]
    fn config_json_defaults_and_errors() {
        let cfg = ScenarioConfig::from_json(r#"{"n_tx": 8, "rician_br": "inf"}"#).unwrap();
        assert_eq!(cfg.n_tx, 8);
        assert_eq!(cfg.n_users, 2);
        assert!(cfg.rician_br.0.is_infinite());
        assert!(ScenarioConfig::from_json(r#"{"outage_prob": 1.5}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let back: ScenarioConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
