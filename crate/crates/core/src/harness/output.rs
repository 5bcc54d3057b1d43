//! Record, aggregate and trace files plus a plotting script.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ao::Scheme;
use crate::error::{Error, Result};

use super::{TraceRecord, TrialRecord};

pub const RECORD_HEADER: &str = "sweep,seed,scheme,feasible,power_dbm,ao_iters,wall_ms,max_outage,max_crb_fail";
pub const AGG_HEADER: &str =
    "sweep,scheme,trials,feasible,feasibility_rate,mean_power_dbm,std_power_dbm,mean_iters,mean_wall_ms";

const NA: &str = "NA";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field == NA {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::Parse(format!("bad number `{field}`")))
}

fn parse<T: std::str::FromStr>(field: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse(format!("bad field `{field}`")))
}

pub fn write_records(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RECORD_HEADER.split(',')).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.sweep.to_string(),
            r.seed.to_string(),
            r.scheme.name().to_string(),
            r.feasible.to_string(),
            opt(r.power_dbm),
            r.ao_iters.to_string(),
            r.wall_ms.to_string(),
            opt(r.max_outage),
            opt(r.max_crb_fail),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = rd.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    if header.join(",") != RECORD_HEADER {
        return Err(Error::Parse(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err(path))?;
        if row.len() != 9 {
            return Err(Error::Parse(format!("{}: expected 9 fields", path.display())));
        }
        out.push(TrialRecord {
            sweep: parse(&row[0])?,
            seed: parse(&row[1])?,
            scheme: Scheme::parse(&row[2]).map_err(|e| Error::Parse(e.to_string()))?,
            feasible: parse(&row[3])?,
            power_dbm: parse_opt(&row[4])?,
            ao_iters: parse(&row[5])?,
            wall_ms: parse(&row[6])?,
            max_outage: parse_opt(&row[7])?,
            max_crb_fail: parse_opt(&row[8])?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep: f64,
    pub scheme: Scheme,
    pub trials: usize,
    pub feasible: usize,
    pub feasibility_rate: f64,
    /// Mean and standard deviation of the dBm power over feasible trials.
    pub mean_power_dbm: Option<f64>,
    pub std_power_dbm: Option<f64>,
    pub mean_iters: f64,
    pub mean_wall_ms: f64,
}

/// Per (sweep value, scheme) summary, ordered by value then scheme.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(u64, Scheme), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        // total order on finite floats via their bit pattern after a sign flip
        let bits = r.sweep.to_bits();
        let key = if r.sweep.is_sign_negative() { !bits } else { bits | (1 << 63) };
        groups.entry((key, r.scheme)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let n = rs.len();
            let powers: Vec<f64> = rs.iter().filter(|r| r.feasible).filter_map(|r| r.power_dbm).collect();
            let mean = (!powers.is_empty()).then(|| powers.iter().sum::<f64>() / powers.len() as f64);
            let std = mean.map(|m| {
                (powers.iter().map(|p| (p - m).powi(2)).sum::<f64>() / powers.len() as f64).sqrt()
            });
            let feasible = rs.iter().filter(|r| r.feasible).count();
            AggregateRow {
                sweep: rs[0].sweep,
                scheme: rs[0].scheme,
                trials: n,
                feasible,
                feasibility_rate: feasible as f64 / n as f64,
                mean_power_dbm: mean,
                std_power_dbm: std,
                mean_iters: rs.iter().map(|r| r.ao_iters as f64).sum::<f64>() / n as f64,
                mean_wall_ms: rs.iter().map(|r| r.wall_ms).sum::<f64>() / n as f64,
            }
        })
        .collect()
}

fn write_aggregate(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(AGG_HEADER.split(',')).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.sweep.to_string(),
            r.scheme.name().to_string(),
            r.trials.to_string(),
            r.feasible.to_string(),
            r.feasibility_rate.to_string(),
            opt(r.mean_power_dbm),
            opt(r.std_power_dbm),
            r.mean_iters.to_string(),
            r.mean_wall_ms.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_traces(traces: &[TraceRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for t in traces {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots power, feasibility and convergence curves from the experiment files."""
import csv
import json
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

prefix = sys.argv[1] if len(sys.argv) > 1 else "{PREFIX}"

rows = list(csv.DictReader(open(prefix + "_agg.csv")))
by_scheme = defaultdict(list)
for r in rows:
    by_scheme[r["scheme"]].append(r)

fig, (ax_p, ax_f) = plt.subplots(1, 2, figsize=(10, 4))
for scheme, rs in sorted(by_scheme.items()):
    xs = [float(r["sweep"]) for r in rs]
    ps = [float(r["mean_power_dbm"]) if r["mean_power_dbm"] != "NA" else float("nan") for r in rs]
    fs = [float(r["feasibility_rate"]) for r in rs]
    ax_p.plot(xs, ps, marker="o", label=scheme)
    ax_f.plot(xs, fs, marker="s", label=scheme)
ax_p.set_xlabel("{SWEEP}")
ax_p.set_ylabel("mean transmit power (dBm)")
ax_f.set_xlabel("{SWEEP}")
ax_f.set_ylabel("feasibility rate")
ax_f.set_ylim(-0.05, 1.05)
for ax in (ax_p, ax_f):
    ax.grid(True, alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(prefix + "_power_feasibility.png", dpi=150)

curves = defaultdict(list)
for line in open(prefix + "_traces.jsonl"):
    rec = json.loads(line)
    trace = rec.get("trace")
    if not trace or trace["best_power_w"] is None:
        continue
    best, run = float("inf"), []
    for it in trace["iterations"]:
        best = min(best, it["power_w"])
        run.append(best)
    curves[rec["scheme"]].append(run)

fig, ax = plt.subplots(figsize=(5, 4))
for scheme, runs in sorted(curves.items()):
    length = max(len(r) for r in runs)
    padded = [r + [r[-1]] * (length - len(r)) for r in runs]
    mean = [sum(col) / len(col) for col in zip(*padded)]
    ax.plot(range(1, length + 1), [10 * __import__("math").log10(p) + 30 for p in mean], marker=".", label=scheme)
ax.set_xlabel("AO iteration")
ax.set_ylabel("mean best power (dBm)")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(prefix + "_convergence.png", dpi=150)
"#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub records: PathBuf,
    pub aggregate: PathBuf,
    pub traces: PathBuf,
    pub plot_script: PathBuf,
}

impl OutputPaths {
    pub fn for_prefix(prefix: &str) -> Self {
        Self {
            records: PathBuf::from(format!("{prefix}_records.csv")),
            aggregate: PathBuf::from(format!("{prefix}_agg.csv")),
            traces: PathBuf::from(format!("{prefix}_traces.jsonl")),
            plot_script: PathBuf::from(format!("{prefix}_plot.py")),
        }
    }
}

/// Writes `<prefix>_records.csv`, `<prefix>_agg.csv`,
/// `<prefix>_traces.jsonl` and `<prefix>_plot.py`.
pub fn emit_outputs(
    records: &[TrialRecord],
    traces: &[TraceRecord],
    sweep_name: &str,
    prefix: &str,
) -> Result<OutputPaths> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let paths = OutputPaths::for_prefix(prefix);
    if let Some(dir) = paths.records.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_records(records, &paths.records)?;
    write_aggregate(&aggregate(records), &paths.aggregate)?;
    write_traces(traces, &paths.traces)?;
    let script = PLOT_SCRIPT.replace("{PREFIX}", prefix).replace("{SWEEP}", sweep_name);
    std::fs::write(&paths.plot_script, script).map_err(io_err(&paths.plot_script))?;
    Ok(paths)
}
