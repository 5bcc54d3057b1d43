//! Per-cone primitives of the interior-point method: identity elements,
//! Nesterov-Todd scalings, Jordan products and step lengths.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};

use super::{smat, svec, Cone};

pub(crate) fn identity(cone: Cone, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match cone {
        Cone::NonNeg(_) => out.iter_mut().for_each(|v| *v = 1.0),
        Cone::Soc(_) => out[0] = 1.0,
        Cone::Psd(n) => {
            for i in 0..n {
                out[super::svec_index(n, i, i)] = 1.0;
            }
        }
    }
}

fn soc_jdot(u: &[f64], v: &[f64]) -> f64 {
    u[0] * v[0] - u[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Nesterov-Todd scaling of one cone block. `W` maps the dual iterate to
/// the scaled point `λ = W z = W^{-T} x`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    NonNeg {
        d: Vec<f64>,
    },
    Soc {
        beta: f64,
        v: Vec<f64>,
        wbar: Vec<f64>,
    },
    Psd {
        n: usize,
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        g: DMatrix<f64>,
        eig: Vec<f64>,
    },
}

impl Scaling {
    /// Computes the scaling at interior `(x, z)` and the scaled point `λ`.
    pub(crate) fn new(cone: Cone, x: &[f64], z: &[f64]) -> Option<(Scaling, Vec<f64>)> {
        match cone {
            Cone::NonNeg(_) => {
                if x.iter().chain(z).any(|v| !(*v > 0.0)) {
                    return None;
                }
                let d: Vec<f64> = x.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let lam = x.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                Some((Scaling::NonNeg { d }, lam))
            }
            Cone::Soc(_) => {
                let xx = soc_jdot(x, x);
                let zz = soc_jdot(z, z);
                if !(xx > 0.0 && zz > 0.0 && x[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let (xn, zn) = (xx.sqrt(), zz.sqrt());
                let beta = (xn / zn).sqrt();
                let xb: Vec<f64> = x.iter().map(|v| v / xn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&xb, &zb)) / 2.0).sqrt();
                // w̄ = (x̄ + J z̄) / (2γ)
                let mut wbar: Vec<f64> = xb.iter().zip(&zb).map(|(a, b)| a - b).collect();
                wbar[0] = xb[0] + zb[0];
                wbar.iter_mut().for_each(|w| *w /= 2.0 * gamma);
                let denom = (2.0 * (wbar[0] + 1.0)).sqrt();
                let mut v: Vec<f64> = wbar.iter().map(|w| w / denom).collect();
                v[0] = (wbar[0] + 1.0) / denom;
                let s = Scaling::Soc { beta, v, wbar };
                let mut lam = vec![0.0; x.len()];
                s.apply_w(z, &mut lam);
                Some((s, lam))
            }
            Cone::Psd(n) => {
                let xm = smat(x, n);
                let zm = smat(z, n);
                let lx = Cholesky::new(xm)?.unpack();
                let lz = Cholesky::new(zm)?.unpack();
                let prod = lz.transpose() * &lx;
                let svd = SVD::new(prod, true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let sv = svd.singular_values;
                if sv.iter().any(|s| !(*s > 0.0)) {
                    return None;
                }
                let inv_sqrt = DMatrix::from_diagonal(&sv.map(|s| 1.0 / s.sqrt()));
                let r = &lx * vt.transpose() * &inv_sqrt;
                let rinv = &inv_sqrt * u.transpose() * lz.transpose();
                let g = &r * r.transpose();
                let eig: Vec<f64> = sv.iter().copied().collect();
                let lam = svec(&DMatrix::from_diagonal(&sv));
                Some((Scaling::Psd { n, r, rinv, g, eig }, lam))
            }
        }
    }

    pub(crate) fn apply_w(&self, a: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { d } => {
                for i in 0..a.len() {
                    out[i] = d[i] * a[i];
                }
            }
            Scaling::Soc { beta, v, .. } => {
                let va = dot(v, a);
                for i in 0..a.len() {
                    let ja = if i == 0 { a[0] } else { -a[i] };
                    out[i] = beta * (2.0 * v[i] * va - ja);
                }
            }
            Scaling::Psd { n, r, .. } => {
                let m = r.transpose() * smat(a, *n) * r;
                out.copy_from_slice(&svec(&m));
            }
        }
    }

    pub(crate) fn apply_winvt(&self, a: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { d } => {
                for i in 0..a.len() {
                    out[i] = a[i] / d[i];
                }
            }
            Scaling::Soc { beta, v, .. } => {
                // W⁻¹ = (2 J v vᵀ J − J) / β and W is symmetric
                let jv0 = v[0];
                let jva = jv0 * a[0] - v[1..].iter().zip(&a[1..]).map(|(p, q)| p * q).sum::<f64>();
                for i in 0..a.len() {
                    let jvi = if i == 0 { v[0] } else { -v[i] };
                    let ja = if i == 0 { a[0] } else { -a[i] };
                    out[i] = (2.0 * jvi * jva - ja) / beta;
                }
            }
            Scaling::Psd { n, rinv, .. } => {
                let m = rinv * smat(a, *n) * rinv.transpose();
                out.copy_from_slice(&svec(&m));
            }
        }
    }

    pub(crate) fn apply_wt(&self, a: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { n, r, .. } => {
                let m = r * smat(a, *n) * r.transpose();
                out.copy_from_slice(&svec(&m));
            }
            _ => self.apply_w(a, out),
        }
    }

    pub(crate) fn apply_wtw(&self, a: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { d } => {
                for i in 0..a.len() {
                    out[i] = d[i] * d[i] * a[i];
                }
            }
            Scaling::Soc { beta, wbar, .. } => {
                let wa = dot(wbar, a);
                let b2 = beta * beta;
                for i in 0..a.len() {
                    let ja = if i == 0 { a[0] } else { -a[i] };
                    out[i] = b2 * (2.0 * wbar[i] * wa - ja);
                }
            }
            Scaling::Psd { n, g, .. } => {
                let m = g * smat(a, *n) * g;
                out.copy_from_slice(&svec(&m));
            }
        }
    }
}

/// Jordan product `u ∘ v` of the cone's algebra.
pub(crate) fn jordan_prod(cone: Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg(_) => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        Cone::Soc(_) => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
        Cone::Psd(n) => {
            let (um, vm) = (smat(u, n), smat(v, n));
            let p = &um * &vm;
            let s = (&p + p.transpose()) * 0.5;
            out.copy_from_slice(&svec(&s));
        }
    }
}

/// Solves `λ ∘ q = r` for `q`, where `λ` is the scaled point of `scaling`.
pub(crate) fn jordan_div(cone: Cone, scaling: &Scaling, lam: &[f64], r: &[f64], out: &mut [f64]) {
    match (cone, scaling) {
        (Cone::NonNeg(_), _) => {
            for i in 0..r.len() {
                out[i] = r[i] / lam[i];
            }
        }
        (Cone::Soc(_), _) => {
            let l1r1: f64 = lam[1..].iter().zip(&r[1..]).map(|(a, b)| a * b).sum();
            let det = soc_jdot(lam, lam);
            let q0 = (lam[0] * r[0] - l1r1) / det;
            out[0] = q0;
            for i in 1..r.len() {
                out[i] = (r[i] - q0 * lam[i]) / lam[0];
            }
        }
        (Cone::Psd(n), Scaling::Psd { eig, .. }) => {
            let mut p = 0;
            for j in 0..n {
                for i in j..n {
                    out[p] = 2.0 * r[p] / (eig[i] + eig[j]);
                    p += 1;
                }
            }
        }
        _ => unreachable!("scaling does not match cone"),
    }
}

/// Largest `α ≥ 0` with `x + α·dx` in the cone (may be infinite).
pub(crate) fn max_step(cone: Cone, x: &[f64], dx: &[f64]) -> f64 {
    match cone {
        Cone::NonNeg(_) => x
            .iter()
            .zip(dx)
            .filter(|(_, d)| **d < 0.0)
            .map(|(a, d)| -a / d)
            .fold(f64::INFINITY, f64::min),
        Cone::Soc(_) => {
            // first positive root of f(α) = (x₀+αd₀)² − ‖x₁+αd₁‖²
            let a = soc_jdot(dx, dx);
            let b = soc_jdot(x, dx);
            let c = soc_jdot(x, x).max(0.0);
            let scale = a.abs().max(b.abs()).max(c);
            if scale == 0.0 {
                return f64::INFINITY;
            }
            let mut best = f64::INFINITY;
            if a.abs() <= 1e-14 * scale {
                if b < 0.0 {
                    best = -c / (2.0 * b);
                }
            } else {
                let disc = b * b - a * c;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    let q = -(b + b.signum() * sq);
                    for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                        if root > 0.0 {
                            best = best.min(root);
                        }
                    }
                }
            }
            if dx[0] < 0.0 {
                best = best.min(-x[0] / dx[0]);
            }
            best
        }
        Cone::Psd(n) => {
            let xm = smat(x, n);
            let Some(chol) = Cholesky::new(xm) else { return 0.0 };
            let l = chol.l();
            let dm = smat(dx, n);
            let Some(linv) = l.clone().try_inverse() else { return 0.0 };
            let m = &linv * dm * linv.transpose();
            let sym = (&m + m.transpose()) * 0.5;
            let lmin = SymmetricEigen::new(sym).eigenvalues.min();
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
    }
}
