//! Plain-text program dump, one item per line:
//!
//! ```text
//! cone <nonneg|soc|psd> <size> <name>
//! c <col> <value>
//! b <row> <value>
//! a <row> <col> <value>
//! ```
//!
//! Cone lines come first and fix the column layout; `psd` sizes are matrix
//! orders and their columns follow the `svec` convention. Only nonzero
//! objective and matrix entries are written; every row gets a `b` line.
//! Lines starting with `#` are comments.

use std::fmt::Write as _;

use super::{Cone, ConicProgram, SparseRow};
use crate::error::{Error, Result};

pub fn write_dump(prog: &ConicProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} columns, {} rows", prog.n_vars(), prog.rows.len());
    for (cone, name) in prog.cones.iter().zip(&prog.block_names) {
        let (kind, size) = match *cone {
            Cone::NonNeg(n) => ("nonneg", n),
            Cone::Soc(n) => ("soc", n),
            Cone::Psd(n) => ("psd", n),
        };
        let name: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        let _ = writeln!(s, "cone {kind} {size} {}", if name.is_empty() { "-" } else { &name });
    }
    for (j, v) in prog.c.iter().enumerate() {
        if *v != 0.0 {
            let _ = writeln!(s, "c {j} {v:e}");
        }
    }
    for (i, (row, b)) in prog.rows.iter().zip(&prog.b).enumerate() {
        let _ = writeln!(s, "b {i} {b:e}");
        for (j, v) in row.idx.iter().zip(&row.val) {
            let _ = writeln!(s, "a {i} {j} {v:e}");
        }
    }
    s
}

pub fn read_dump(text: &str) -> Result<ConicProgram> {
    let bad = |ln: usize, msg: &str| Error::Parse(format!("line {}: {msg}", ln + 1));
    let mut cones = Vec::new();
    let mut names = Vec::new();
    let mut c_entries = Vec::new();
    let mut b_entries = Vec::new();
    let mut a_entries: Vec<(usize, usize, f64)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |k: usize| -> Result<usize> {
            f.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| bad(ln, "expected an index"))
        };
        let real = |k: usize| -> Result<f64> {
            f.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| bad(ln, "expected a number"))
        };
        match f[0] {
            "cone" => {
                let size = num(2)?;
                let cone = match f.get(1).copied() {
                    Some("nonneg") => Cone::NonNeg(size),
                    Some("soc") => Cone::Soc(size),
                    Some("psd") => Cone::Psd(size),
                    _ => return Err(bad(ln, "unknown cone kind")),
                };
                cones.push(cone);
                names.push(f.get(3).unwrap_or(&"-").to_string());
            }
            "c" => c_entries.push((num(1)?, real(2)?)),
            "b" => b_entries.push((num(1)?, real(2)?)),
            "a" => a_entries.push((num(1)?, num(2)?, real(3)?)),
            _ => return Err(bad(ln, "unknown record")),
        }
    }
    let n: usize = cones.iter().map(Cone::dim).sum();
    let m = b_entries.iter().map(|e| e.0 + 1).chain(a_entries.iter().map(|e| e.0 + 1)).max().unwrap_or(0);
    let mut c = vec![0.0; n];
    for (j, v) in c_entries {
        *c.get_mut(j).ok_or_else(|| Error::Parse(format!("objective column {j} out of range")))? += v;
    }
    let mut b = vec![0.0; m];
    for (i, v) in b_entries {
        b[i] = v;
    }
    let mut pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (i, j, v) in a_entries {
        pairs[i].push((j, v));
    }
    let prog = ConicProgram {
        cones,
        block_names: names,
        c,
        rows: pairs.into_iter().map(SparseRow::from_pairs).collect(),
        b,
    };
    prog.validate()?;
    Ok(prog)
}
