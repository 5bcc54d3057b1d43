//! Real-valued cone programs in standard primal form and an interior-point
//! solver for them.
//!
//! A program is `min cᵀx  s.t.  Ax = b,  x ∈ K` where `K` is a product of
//! non-negative orthants, second-order cones `{(t, u) : ‖u‖ ≤ t}` and
//! positive semidefinite cones. PSD blocks are stored in `svec` form: the
//! lower triangle column by column with off-diagonal entries scaled by √2,
//! so that the Euclidean inner product of two `svec`s equals the trace inner
//! product of the matrices.

mod chol;
mod cones;
mod dump;
mod embed;
mod solver;

pub use dump::{read_dump, write_dump};
pub use embed::{
    complex_functional, embed_hermitian, extract_rank_one, hermitian_functional, unembed_hermitian,
    RankOne,
};
pub use solver::{solve, IterationInfo, Settings};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    NonNeg(usize),
    /// Second-order cone of total dimension `n` (head plus `n − 1` tail).
    Soc(usize),
    /// `n × n` symmetric PSD matrices, `n(n+1)/2` coordinates.
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(n) | Cone::Soc(n) => n,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    /// Barrier degree contributed to the complementarity measure.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(n) | Cone::Psd(n) => n,
            Cone::Soc(_) => 1,
        }
    }
}

/// One row of the equality matrix, sorted by column with no duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    /// Sorts, merges duplicate columns and drops exact zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut row = SparseRow::default();
        for (j, v) in pairs {
            if row.idx.last() == Some(&j) {
                *row.val.last_mut().unwrap() += v;
            } else {
                row.idx.push(j);
                row.val.push(v);
            }
        }
        let keep: Vec<bool> = row.val.iter().map(|v| *v != 0.0).collect();
        let mut k = keep.iter();
        row.idx.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        row.val.retain(|_| *k.next().unwrap());
        row
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&j, &v)| v * x[j]).sum()
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub cones: Vec<Cone>,
    pub block_names: Vec<String>,
    pub c: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub b: Vec<f64>,
}

impl ConicProgram {
    pub fn n_vars(&self) -> usize {
        self.cones.iter().map(Cone::dim).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cones.len());
        let mut acc = 0;
        for k in &self.cones {
            off.push(acc);
            acc += k.dim();
        }
        off
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.c.len() != n {
            return dims(format!("objective has {} entries, cones have {n}", self.c.len()));
        }
        if self.rows.len() != self.b.len() {
            return dims("row count and rhs length differ");
        }
        if self.block_names.len() != self.cones.len() {
            return dims("one name per block required");
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.idx.len() != r.val.len() || r.idx.windows(2).any(|w| w[0] >= w[1]) {
                return dims(format!("row {i} is not strictly sorted"));
            }
            if r.idx.last().is_some_and(|&j| j >= n) {
                return dims(format!("row {i} references a column beyond {n}"));
            }
        }
        Ok(())
    }
}

/// Handle to a block added through [`ProgramBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub cone: Cone,
}

impl Block {
    /// Column of entry `(i, j)` of a PSD block.
    pub fn psd_index(&self, i: usize, j: usize) -> usize {
        let Cone::Psd(n) = self.cone else { panic!("not a PSD block") };
        self.offset + svec_index(n, i, j)
    }

    pub fn col(&self, i: usize) -> usize {
        debug_assert!(i < self.cone.dim());
        self.offset + i
    }
}

#[derive(Debug, Default)]
pub struct ProgramBuilder {
    cones: Vec<Cone>,
    names: Vec<String>,
    c: Vec<f64>,
    rows: Vec<SparseRow>,
    b: Vec<f64>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: impl Into<String>, cone: Cone) -> Block {
        let offset = self.c.len();
        self.c.extend(std::iter::repeat_n(0.0, cone.dim()));
        self.cones.push(cone);
        self.names.push(name.into());
        Block { offset, cone }
    }

    pub fn add_cost(&mut self, col: usize, v: f64) {
        self.c[col] += v;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.rows.push(SparseRow::from_pairs(coeffs));
        self.b.push(rhs);
        self.rows.len() - 1
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn build(self) -> ConicProgram {
        ConicProgram { cones: self.cones, block_names: self.names, c: self.c, rows: self.rows, b: self.b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped before reaching the tolerance: iteration limit or numerical
    /// breakdown.
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: KktResiduals,
    pub iterations: usize,
    pub history: Vec<IterationInfo>,
}

impl ConicSolution {
    /// Extracts a PSD block as a dense symmetric matrix.
    pub fn psd_block(&self, block: &Block) -> DMatrix<f64> {
        let Cone::Psd(n) = block.cone else { panic!("not a PSD block") };
        smat(&self.x[block.offset..block.offset + block.cone.dim()], n)
    }
}

/// Position of entry `(i, j)` of an `n × n` symmetric matrix in `svec`.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * (2 * n - j + 1) / 2 + (i - j)
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(std::f64::consts::SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut p = 0;
    for j in 0..n {
        m[(j, j)] = v[p];
        p += 1;
        for i in j + 1..n {
            let x = v[p] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            p += 1;
        }
    }
    m
}
