use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{svec_index, Block, Cone};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_deviation, hermitian_part, herm_eig, CMat, CVec, J};

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]`.
pub fn embed_hermitian(h: &CMat) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Dimension("embedding needs a square matrix".into()));
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = hermitian_deviation(h);
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            e[(i, j)] = z.re;
            e[(i + n, j + n)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + n, j)] = z.im;
        }
    }
    Ok(e)
}

/// Hermitian matrix closest to the embedding structure of a real `2n × 2n`
/// symmetric `y`: `(Y₁₁ + Y₂₂)/2 + j(Y₂₁ − Y₁₂)/2`.
pub fn unembed_hermitian(y: &DMatrix<f64>) -> CMat {
    let n = y.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        c(
            0.5 * (y[(i, j)] + y[(i + n, j + n)]),
            0.5 * (y[(i + n, j)] - y[(i, j + n)]),
        )
    })
}

/// Coefficients on the `svec` columns of `block` (a real PSD block holding
/// the embedding of an `n × n` Hermitian `Γ`) that evaluate `Re Tr(H Γ)`.
pub fn hermitian_functional(h: &CMat, block: &Block) -> Vec<(usize, f64)> {
    let Cone::Psd(two_n) = block.cone else { panic!("functional needs a PSD block") };
    let n = two_n / 2;
    assert_eq!(h.nrows(), n, "functional size does not match block");
    let hh = hermitian_part(h);
    let half_rt2 = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    let mut push = |a: usize, b: usize, v: f64| {
        if v != 0.0 {
            let w = if a == b { 0.5 } else { half_rt2 };
            out.push((block.offset + svec_index(two_n, a, b), w * v));
        }
    };
    for i in 0..n {
        for j in 0..n {
            let z = hh[(i, j)];
            if z.re != 0.0 {
                push(i, j, z.re);
                push(i + n, j + n, z.re);
            }
            if z.im != 0.0 {
                push(i, j + n, -z.im);
                push(i + n, j, z.im);
            }
        }
    }
    out
}

/// Coefficients of `Re Tr(B Γ)` and `Im Tr(B Γ)` for a general complex `B`.
pub fn complex_functional(b: &CMat, block: &Block) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let re = hermitian_functional(b, block);
    let im = hermitian_functional(&(b * (-J)), block);
    (re, im)
}

/// Result of a rank-one test.
#[derive(Debug, Clone, PartialEq)]
pub enum RankOne {
    Vector(CVec),
    NotRankOne { ratio: f64 },
}

/// Principal component `√λ₁·u₁` of a PSD matrix when `λ₂/λ₁ ≤ rank_tol`.
/// The returned vector has its first significant entry real and positive.
pub fn extract_rank_one(g: &CMat, rank_tol: f64) -> Result<RankOne> {
    let n = g.nrows();
    let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dev = hermitian_deviation(g);
    if dev > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(dev));
    }
    if n == 0 || scale == 0.0 {
        return Ok(RankOne::Vector(CVec::zeros(n)));
    }
    let (vals, vecs) = herm_eig(g);
    let l1 = vals[n - 1];
    if vals[0] < -1e-8 * l1.abs().max(scale) {
        return Err(Error::Indefinite(vals[0]));
    }
    let l2 = if n > 1 { vals[n - 2].max(0.0) } else { 0.0 };
    let ratio = l2 / l1;
    if ratio > rank_tol {
        return Ok(RankOne::NotRankOne { ratio });
    }
    let mut v: CVec = vecs.column(n - 1).into_owned() * c(l1.sqrt(), 0.0);
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-9 * vmax).copied() {
        let phase: Complex64 = first.conj() / first.norm();
        v *= phase;
    }
    Ok(RankOne::Vector(v))
}
