//! Dense Cholesky factorization with a blocked right-looking update so the
//! bulk of the work runs through the matrix-multiply kernel.

use nalgebra::{DMatrix, DVector};

const NB: usize = 48;

#[derive(Debug, Clone)]
pub(crate) struct Chol {
    /// Lower factor; the strict upper triangle is garbage.
    l: DMatrix<f64>,
}

impl Chol {
    /// Factors a symmetric matrix using its lower triangle. Returns `None`
    /// on a non-positive pivot.
    pub(crate) fn new(mut a: DMatrix<f64>) -> Option<Self> {
        let m = a.nrows();
        let mut k = 0;
        while k < m {
            let kb = NB.min(m - k);
            // diagonal block
            for j in k..k + kb {
                let mut d = a[(j, j)];
                for p in k..j {
                    d -= a[(j, p)] * a[(j, p)];
                }
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                let d = d.sqrt();
                a[(j, j)] = d;
                for i in j + 1..k + kb {
                    let mut s = a[(i, j)];
                    for p in k..j {
                        s -= a[(i, p)] * a[(j, p)];
                    }
                    a[(i, j)] = s / d;
                }
            }
            let rest = m - k - kb;
            if rest == 0 {
                break;
            }
            // panel: A21 ← A21 L11⁻ᵀ, on column slices
            let data = a.as_mut_slice();
            for j in k..k + kb {
                let d = data[j * m + j];
                for p in k..j {
                    let ljp = data[p * m + j];
                    if ljp != 0.0 {
                        let (left, right) = data.split_at_mut(j * m);
                        let src = &left[p * m + k + kb..p * m + m];
                        let dst = &mut right[k + kb..m];
                        for (x, v) in dst.iter_mut().zip(src) {
                            *x -= v * ljp;
                        }
                    }
                }
                for x in &mut data[j * m + k + kb..j * m + m] {
                    *x /= d;
                }
            }
            // trailing lower triangle, one block column at a time
            let panel = a.view((k + kb, k), (rest, kb)).clone_owned();
            let mut j0 = 0;
            while j0 < rest {
                let jb = NB.min(rest - j0);
                let lhs = panel.rows(j0, rest - j0);
                let rhs_t = panel.rows(j0, jb).transpose();
                let mut target = a.view_mut((k + kb + j0, k + kb + j0), (rest - j0, jb));
                target.gemm(-1.0, &lhs, &rhs_t, 1.0);
                j0 += jb;
            }
            k += kb;
        }
        Some(Self { l: a })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = self.l.nrows();
        let mut x = b.clone();
        let l = self.l.as_slice();
        let xs = x.as_mut_slice();
        for j in 0..m {
            let col = &l[j * m..(j + 1) * m];
            xs[j] /= col[j];
            let xj = xs[j];
            for (xi, li) in xs[j + 1..].iter_mut().zip(&col[j + 1..]) {
                *xi -= li * xj;
            }
        }
        for j in (0..m).rev() {
            let col = &l[j * m..(j + 1) * m];
            let s: f64 = xs[j + 1..].iter().zip(&col[j + 1..]).map(|(a, b)| a * b).sum();
            xs[j] = (xs[j] - s) / col[j];
        }
        x
    }
}
