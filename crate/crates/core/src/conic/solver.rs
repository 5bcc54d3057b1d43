//! Homogeneous self-dual interior-point method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.

use nalgebra::{DMatrix, DVector};

use super::chol::Chol;

use super::cones::{identity, jordan_div, jordan_prod, max_step, Scaling};
use super::{Cone, ConicProgram, ConicSolution, KktResiduals, SparseRow, Status};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: usize,
    /// Ruiz-style row/block equilibration before solving.
    pub equilibrate: bool,
    /// Keep per-iteration diagnostics in [`ConicSolution::history`].
    pub record_history: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200, equilibrate: true, record_history: false }
    }
}

/// Diagnostics of one iterate, expressed in the original problem data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInfo {
    pub iter: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `x̂ᵀẑ`, non-negative at every interior iterate.
    pub complementarity: f64,
    /// `ŷᵀr_p − r_dᵀx̂`, so that `pobj − dobj = complementarity + correction`.
    pub residual_correction: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub step: f64,
}

struct BlockInfo {
    cone: Cone,
    off: usize,
    dim: usize,
}

/// Entries of one row restricted to one block, local column indices.
struct RowSlice {
    row: usize,
    idx: Vec<usize>,
    val: Vec<f64>,
}

struct Scaled {
    rows: Vec<SparseRow>,
    b: Vec<f64>,
    c: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    sb: f64,
    sc: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn blocks_of(prog: &ConicProgram) -> Vec<BlockInfo> {
    let mut off = 0;
    prog.cones
        .iter()
        .map(|&cone| {
            let b = BlockInfo { cone, off, dim: cone.dim() };
            off += b.dim;
            b
        })
        .collect()
}

fn equilibrate(prog: &ConicProgram, blocks: &[BlockInfo], enabled: bool) -> Scaled {
    let m = prog.rows.len();
    let n = prog.n_vars();
    let mut row_scale = vec![1.0; m];
    let mut col_scale = vec![1.0; n];
    // columns sharing a group receive the same factor so cones are preserved
    let mut group = vec![0usize; n];
    let mut n_groups = 0;
    for b in blocks {
        match b.cone {
            Cone::NonNeg(_) => {
                for j in b.off..b.off + b.dim {
                    group[j] = n_groups;
                    n_groups += 1;
                }
            }
            _ => {
                group[b.off..b.off + b.dim].iter_mut().for_each(|g| *g = n_groups);
                n_groups += 1;
            }
        }
    }
    if enabled {
        for _ in 0..20 {
            let mut rmax = vec![0.0_f64; m];
            let mut gmax = vec![0.0_f64; n_groups];
            for (i, r) in prog.rows.iter().enumerate() {
                for (&j, &v) in r.idx.iter().zip(&r.val) {
                    let a = (v * row_scale[i] * col_scale[j]).abs();
                    rmax[i] = rmax[i].max(a);
                    gmax[group[j]] = gmax[group[j]].max(a);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    row_scale[i] = (row_scale[i] / rmax[i].sqrt()).clamp(1e-8, 1e8);
                }
            }
            for j in 0..n {
                let g = gmax[group[j]];
                if g > 0.0 {
                    col_scale[j] = (col_scale[j] / g.sqrt()).clamp(1e-8, 1e8);
                }
            }
        }
    }
    let rows: Vec<SparseRow> = prog
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| SparseRow {
            idx: r.idx.clone(),
            val: r.idx.iter().zip(&r.val).map(|(&j, &v)| v * row_scale[i] * col_scale[j]).collect(),
        })
        .collect();
    let b: Vec<f64> = prog.b.iter().zip(&row_scale).map(|(v, s)| v * s).collect();
    let c: Vec<f64> = prog.c.iter().zip(&col_scale).map(|(v, s)| v * s).collect();
    let nb = norm(&b);
    let nc = norm(&c);
    let sb = if nb > 1e-300 { nb } else { 1.0 };
    let sc = if nc > 1e-300 { nc } else { 1.0 };
    Scaled {
        rows,
        b: b.iter().map(|v| v / sb).collect(),
        c: c.iter().map(|v| v / sc).collect(),
        row_scale,
        col_scale,
        sb,
        sc,
    }
}

struct Ipm<'a> {
    blocks: Vec<BlockInfo>,
    data: &'a Scaled,
    m: usize,
    n: usize,
    /// Column-wise entries `(row, value)` of the scaled matrix.
    cols: Vec<Vec<(usize, f64)>>,
    /// Row slices touching each block.
    touching: Vec<Vec<RowSlice>>,
    /// `svec` position → (i, j, weight) for every PSD block size.
    psd_pairs: Vec<Vec<(usize, usize, f64)>>,
}

impl<'a> Ipm<'a> {
    fn new(blocks: Vec<BlockInfo>, data: &'a Scaled) -> Self {
        let m = data.rows.len();
        let n = data.c.len();
        let mut cols = vec![Vec::new(); n];
        for (i, r) in data.rows.iter().enumerate() {
            for (&j, &v) in r.idx.iter().zip(&r.val) {
                cols[j].push((i, v));
            }
        }
        let mut touching: Vec<Vec<RowSlice>> = blocks.iter().map(|_| Vec::new()).collect();
        let starts: Vec<usize> = blocks.iter().map(|b| b.off).collect();
        for (i, r) in data.rows.iter().enumerate() {
            let mut k = 0;
            while k < r.idx.len() {
                let bi = starts.partition_point(|&s| s <= r.idx[k]) - 1;
                let (lo, hi) = (blocks[bi].off, blocks[bi].off + blocks[bi].dim);
                let mut slice = RowSlice { row: i, idx: Vec::new(), val: Vec::new() };
                while k < r.idx.len() && r.idx[k] < hi {
                    slice.idx.push(r.idx[k] - lo);
                    slice.val.push(r.val[k]);
                    k += 1;
                }
                touching[bi].push(slice);
            }
        }
        let psd_pairs = blocks
            .iter()
            .map(|b| match b.cone {
                Cone::Psd(nn) => {
                    let mut t = Vec::with_capacity(b.dim);
                    for j in 0..nn {
                        for i in j..nn {
                            t.push((i, j, if i == j { 1.0 } else { std::f64::consts::SQRT_2 }));
                        }
                    }
                    t
                }
                _ => Vec::new(),
            })
            .collect();
        Self { blocks, data, m, n, cols, touching, psd_pairs }
    }

    fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.data.rows.iter().map(|r| r.dot(x)).collect()
    }

    fn at_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (r, &yi) in self.data.rows.iter().zip(y) {
            if yi != 0.0 {
                for (&j, &v) in r.idx.iter().zip(&r.val) {
                    out[j] += v * yi;
                }
            }
        }
        out
    }

    fn per_block<F: FnMut(usize, &BlockInfo, &[f64], &mut [f64])>(&self, v: &[f64], mut f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (bi, b) in self.blocks.iter().enumerate() {
            let r = b.off..b.off + b.dim;
            f(bi, b, &v[r.clone()], &mut out[r]);
        }
        out
    }

    fn wtw(&self, sc: &[Scaling], v: &[f64]) -> Vec<f64> {
        self.per_block(v, |bi, _, a, o| sc[bi].apply_wtw(a, o))
    }

    /// Schur complement `A WᵀW Aᵀ`, lower triangle filled then mirrored.
    fn schur(&self, sc: &[Scaling]) -> DMatrix<f64> {
        let m = self.m;
        let mut mm = DMatrix::<f64>::zeros(m, m);
        let mut add = |i: usize, k: usize, v: f64| {
            let (a, b) = if i >= k { (i, k) } else { (k, i) };
            mm[(a, b)] += v;
        };
        for (bi, b) in self.blocks.iter().enumerate() {
            match (&sc[bi], b.cone) {
                (Scaling::NonNeg { d }, _) => {
                    for j in 0..b.dim {
                        let w = d[j] * d[j];
                        let col = &self.cols[b.off + j];
                        for (p, &(r1, v1)) in col.iter().enumerate() {
                            for &(r2, v2) in &col[..=p] {
                                add(r1, r2, w * v1 * v2);
                            }
                        }
                    }
                }
                (Scaling::Soc { beta, wbar, .. }, _) => {
                    let b2 = beta * beta;
                    let rows = &self.touching[bi];
                    let u: Vec<f64> = rows
                        .iter()
                        .map(|s| s.idx.iter().zip(&s.val).map(|(&q, &v)| wbar[q] * v).sum())
                        .collect();
                    for p in 0..rows.len() {
                        for q in 0..=p {
                            add(rows[p].row, rows[q].row, 2.0 * b2 * u[p] * u[q]);
                        }
                    }
                    for j in 0..b.dim {
                        let sign = if j == 0 { 1.0 } else { -1.0 };
                        let col = &self.cols[b.off + j];
                        for (p, &(r1, v1)) in col.iter().enumerate() {
                            for &(r2, v2) in &col[..=p] {
                                add(r1, r2, -b2 * sign * v1 * v2);
                            }
                        }
                    }
                }
                (Scaling::Psd { n: nn, g, .. }, _) => {
                    let nn = *nn;
                    let rows = &self.touching[bi];
                    let pairs = &self.psd_pairs[bi];
                    let dense: Vec<bool> = rows.iter().map(|s| s.idx.len() > nn).collect();
                    let dense_idx: Vec<usize> = (0..rows.len()).filter(|&p| dense[p]).collect();
                    if !dense_idx.is_empty() {
                        let nd = dense_idx.len();
                        let mut raw = DMatrix::<f64>::zeros(b.dim, nd);
                        let mut img = DMatrix::<f64>::zeros(b.dim, nd);
                        for (col, &p) in dense_idx.iter().enumerate() {
                            for (&q, &v) in rows[p].idx.iter().zip(&rows[p].val) {
                                raw[(q, col)] = v;
                            }
                            sc[bi].apply_wtw(raw.column(col).as_slice(), img.column_mut(col).as_mut_slice());
                        }
                        let gram = img.transpose() * &raw;
                        for a in 0..nd {
                            for c2 in 0..=a {
                                add(rows[dense_idx[a]].row, rows[dense_idx[c2]].row, gram[(a, c2)]);
                            }
                        }
                        for (col, &p) in dense_idx.iter().enumerate() {
                            let im = img.column(col);
                            for (q, other) in rows.iter().enumerate() {
                                if dense[q] {
                                    continue;
                                }
                                let v: f64 = other.idx.iter().zip(&other.val).map(|(&t, &w)| im[t] * w).sum();
                                add(rows[p].row, other.row, v);
                            }
                        }
                    }
                    for p in 0..rows.len() {
                        if dense[p] {
                            continue;
                        }
                        for q in 0..=p {
                            if dense[q] {
                                continue;
                            }
                            let mut acc = 0.0;
                            for (&s1, &v1) in rows[p].idx.iter().zip(&rows[p].val) {
                                let (i, j, w1) = pairs[s1];
                                for (&s2, &v2) in rows[q].idx.iter().zip(&rows[q].val) {
                                    let (k, l, w2) = pairs[s2];
                                    let e = 0.5 * w1 * w2 * (g[(i, k)] * g[(j, l)] + g[(i, l)] * g[(j, k)]);
                                    acc += v1 * v2 * e;
                                }
                            }
                            add(rows[p].row, rows[q].row, acc);
                        }
                    }
                }
            }
        }
        for j in 0..m {
            for i in j + 1..m {
                mm[(j, i)] = mm[(i, j)];
            }
        }
        mm
    }
}

/// Factorization of the Schur matrix with a diagonal shift when needed and
/// one step of iterative refinement against the unshifted matrix.
struct SchurSolver {
    mat: DMatrix<f64>,
    chol: Option<Chol>,
}

impl SchurSolver {
    fn new(mat: DMatrix<f64>) -> Self {
        let m = mat.nrows();
        if m == 0 {
            return Self { mat, chol: None };
        }
        let dmax = (0..m).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut shift = 1e-15 * dmax;
        for _ in 0..12 {
            let mut shifted = mat.clone();
            for i in 0..m {
                shifted[(i, i)] += shift;
            }
            if let Some(ch) = Chol::new(shifted) {
                return Self { mat, chol: Some(ch) };
            }
            shift *= 100.0;
        }
        Self { mat, chol: None }
    }

    fn ok(&self) -> bool {
        self.mat.nrows() == 0 || self.chol.is_some()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let Some(ch) = &self.chol else { return vec![0.0; rhs.len()] };
        let r = DVector::from_column_slice(rhs);
        let mut x = ch.solve(&r);
        for _ in 0..2 {
            let res = &r - &self.mat * &x;
            x += ch.solve(&res);
        }
        x.as_slice().to_vec()
    }
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Solves the cone program. The returned `x`, `y`, `z` are in the original
/// (unequilibrated) coordinates; for infeasible or unbounded problems they
/// hold the corresponding certificate instead of a solution.
pub fn solve(prog: &ConicProgram, settings: &Settings) -> Result<ConicSolution> {
    prog.validate()?;
    let blocks = blocks_of(prog);
    let data = equilibrate(prog, &blocks, settings.equilibrate);
    let ipm = Ipm::new(blocks, &data);
    let (m, n) = (ipm.m, ipm.n);
    let nu: usize = ipm.blocks.iter().map(|b| b.cone.degree()).sum();

    let e = ipm.per_block(&vec![0.0; n], |_, b, _, o| identity(b.cone, o));
    let mut x = e.clone();
    let mut z = e.clone();
    let mut y = vec![0.0; m];
    let (mut tau, mut kappa) = (1.0_f64, 1.0_f64);

    let bnorm = norm(&prog.b).max(1.0);
    let cnorm = norm(&prog.c).max(1.0);
    let tol = settings.tol;
    let mut history = Vec::new();
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    let mut last_step = 0.0;
    let mut small_steps = 0;

    let unscale = |x: &[f64], y: &[f64], z: &[f64], t: f64| {
        let xo: Vec<f64> = x.iter().zip(&data.col_scale).map(|(v, s)| v * s * data.sb / t).collect();
        let yo: Vec<f64> = y.iter().zip(&data.row_scale).map(|(v, s)| v * s * data.sc / t).collect();
        let zo: Vec<f64> = z.iter().zip(&data.col_scale).map(|(v, s)| v / s * data.sc / t).collect();
        (xo, yo, zo)
    };

    loop {
        let ax = ipm.a_mul(&x);
        let aty = ipm.at_mul(&y);
        let rp: Vec<f64> = ax.iter().zip(&data.b).map(|(a, b)| a - b * tau).collect();
        let rd: Vec<f64> = (0..n).map(|j| aty[j] + z[j] - data.c[j] * tau).collect();
        let by = dot(&data.b, &y);
        let cx = dot(&data.c, &x);
        let rg = kappa - by + cx;
        let mu = (dot(&x, &z) + tau * kappa) / (nu as f64 + 1.0);

        let (xo, yo, zo) = unscale(&x, &y, &z, tau);
        let rpo: Vec<f64> = prog.rows.iter().zip(&prog.b).map(|(r, b)| r.dot(&xo) - b).collect();
        let mut rdo = vec![0.0; n];
        for (r, &yi) in prog.rows.iter().zip(&yo) {
            for (&j, &v) in r.idx.iter().zip(&r.val) {
                rdo[j] += v * yi;
            }
        }
        for j in 0..n {
            rdo[j] += zo[j] - prog.c[j];
        }
        let pobj = dot(&prog.c, &xo);
        let dobj = dot(&prog.b, &yo);
        let pres = norm(&rpo) / bnorm;
        let dres = norm(&rdo) / cnorm;
        if settings.record_history {
            history.push(IterationInfo {
                iter: iterations,
                primal_objective: pobj,
                dual_objective: dobj,
                complementarity: dot(&xo, &zo),
                residual_correction: dot(&yo, &rpo) - dot(&rdo, &xo),
                primal_residual: pres,
                dual_residual: dres,
                mu,
                step: last_step,
            });
        }
        if pres <= tol && dres <= tol && (pobj - dobj).abs() <= tol * (1.0 + pobj.abs().min(dobj.abs())) {
            status = Status::Optimal;
            break;
        }
        if by > 0.0 && tau < kappa && norm(&ipm.at_mul(&y).iter().zip(&z).map(|(a, b)| a + b).collect::<Vec<_>>()) <= tol * by {
            status = Status::Infeasible;
            break;
        }
        if cx < 0.0 && tau < kappa && norm(&ax) <= tol * (-cx) {
            status = Status::Unbounded;
            break;
        }
        if iterations >= settings.max_iter || small_steps >= 5 {
            break;
        }

        let mut scalings = Vec::with_capacity(ipm.blocks.len());
        let mut lam = vec![0.0; n];
        let mut failed = false;
        for b in &ipm.blocks {
            let r = b.off..b.off + b.dim;
            match Scaling::new(b.cone, &x[r.clone()], &z[r.clone()]) {
                Some((s, l)) => {
                    lam[r].copy_from_slice(&l);
                    scalings.push(s);
                }
                None => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            break;
        }
        let schur = SchurSolver::new(ipm.schur(&scalings));
        if !schur.ok() {
            break;
        }

        // second right-hand side shared by both Newton solves
        let w2c = ipm.wtw(&scalings, &data.c);
        let rhs2: Vec<f64> = ipm.a_mul(&w2c).iter().zip(&data.b).map(|(a, b)| a + b).collect();
        let dy2 = schur.solve(&rhs2);
        let at_dy2 = ipm.at_mul(&dy2);
        let dx2 = ipm.wtw(&scalings, &(0..n).map(|j| at_dy2[j] - data.c[j]).collect::<Vec<_>>());
        let denom = -dot(&data.b, &dy2) + dot(&data.c, &dx2) - kappa / tau;

        let newton = |eta: f64, rc: &[f64], rtau: f64| -> Direction {
            let q = ipm.per_block(rc, |bi, b, r, o| {
                let lr = &lam[b.off..b.off + b.dim];
                jordan_div(b.cone, &scalings[bi], lr, r, o)
            });
            let wq = ipm.per_block(&q, |bi, _, a, o| scalings[bi].apply_wt(a, o));
            let w2rd = ipm.wtw(&scalings, &rd);
            let t1: Vec<f64> = (0..n).map(|j| wq[j] + eta * w2rd[j]).collect();
            let at1 = ipm.a_mul(&t1);
            let rhs1: Vec<f64> = (0..m).map(|i| -eta * rp[i] - at1[i]).collect();
            let dy1 = schur.solve(&rhs1);
            let w2aty1 = ipm.wtw(&scalings, &ipm.at_mul(&dy1));
            let dx1: Vec<f64> = (0..n).map(|j| t1[j] + w2aty1[j]).collect();
            let dtau =
                (-eta * rg + dot(&data.b, &dy1) - dot(&data.c, &dx1) - rtau / tau) / denom;
            let dy: Vec<f64> = (0..m).map(|i| dy1[i] + dtau * dy2[i]).collect();
            let dx: Vec<f64> = (0..n).map(|j| dx1[j] + dtau * dx2[j]).collect();
            let aty = ipm.at_mul(&dy);
            let dz: Vec<f64> = (0..n).map(|j| -eta * rd[j] - aty[j] + data.c[j] * dtau).collect();
            let dkappa = (rtau - kappa * dtau) / tau;
            Direction { dx, dy, dz, dtau, dkappa }
        };
        let step_to_boundary = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for b in &ipm.blocks {
                let r = b.off..b.off + b.dim;
                a = a.min(max_step(b.cone, &x[r.clone()], &d.dx[r.clone()]));
                a = a.min(max_step(b.cone, &z[r.clone()], &d.dz[r]));
            }
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        let lam_sq = ipm.per_block(&lam, |_, b, l, o| jordan_prod(b.cone, l, l, o));
        let rc_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let aff = newton(1.0, &rc_aff, -tau * kappa);
        let alpha_aff = step_to_boundary(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        let wdz = ipm.per_block(&aff.dz, |bi, _, a, o| scalings[bi].apply_w(a, o));
        let wdx = ipm.per_block(&aff.dx, |bi, _, a, o| scalings[bi].apply_winvt(a, o));
        let corr = ipm.per_block(&wdz, |bi, b, a, o| {
            jordan_prod(b.cone, a, &wdx[ipm.blocks[bi].off..ipm.blocks[bi].off + b.dim], o)
        });
        let rc: Vec<f64> = (0..n).map(|j| -lam_sq[j] - corr[j] + sigma * mu * e[j]).collect();
        let rtau = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let dir = newton(1.0 - sigma, &rc, rtau);
        let alpha = (0.99 * step_to_boundary(&dir)).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            break;
        }
        small_steps = if alpha < 1e-8 { small_steps + 1 } else { 0 };

        for j in 0..n {
            x[j] += alpha * dir.dx[j];
            z[j] += alpha * dir.dz[j];
        }
        for i in 0..m {
            y[i] += alpha * dir.dy[i];
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        last_step = alpha;
        iterations += 1;
    }

    let t = if status == Status::Optimal || status == Status::MaxIter { tau } else { 1.0 };
    let (xo, yo, zo) = unscale(&x, &y, &z, t);
    let rpo: Vec<f64> = prog.rows.iter().zip(&prog.b).map(|(r, b)| r.dot(&xo) - b).collect();
    let mut rdo: Vec<f64> = (0..n).map(|j| zo[j] - prog.c[j]).collect();
    for (r, &yi) in prog.rows.iter().zip(&yo) {
        for (&j, &v) in r.idx.iter().zip(&r.val) {
            rdo[j] += v * yi;
        }
    }
    let pobj = dot(&prog.c, &xo);
    let dobj = dot(&prog.b, &yo);
    Ok(ConicSolution {
        status,
        residuals: KktResiduals {
            primal: norm(&rpo) / bnorm,
            dual: norm(&rdo) / cnorm,
            gap: (pobj - dobj).abs(),
        },
        x: xo,
        y: yo,
        z: zo,
        primal_objective: pobj,
        dual_objective: dobj,
        iterations,
        history,
    })
}
