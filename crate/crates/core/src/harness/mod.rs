//! Monte Carlo experiments over a swept scenario parameter.

mod output;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{run_ao, AoConfig, AoStatus, AoTrace, Scheme};
use crate::chance::{empirical_outage, Requirements};
use crate::error::{Error, Result};
use crate::linalg::{dbm_to_watts, watts_to_dbm};
use crate::metrics::BeamformerSet;
use crate::scene::{sample_realization, trial_rng, ChannelRealization, ScenarioConfig};

pub use output::{
    aggregate, emit_outputs, read_records, write_records, AggregateRow, OutputPaths, AGG_HEADER,
    RECORD_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    NTx,
    NRis,
    /// Sets all three error parameters to the swept value.
    ErrScale,
    PhaseLevels,
}

impl SweepVar {
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("sweep value {value} must be a non-negative integer")))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepVar::NTx => cfg.n_tx = count()?,
            SweepVar::NRis => cfg.n_ris = count()?,
            SweepVar::ErrScale => {
                cfg.err_bu = value;
                cfg.err_bru = value;
                cfg.err_rc = value;
            }
            SweepVar::PhaseLevels => {
                cfg.phase_levels = count()?;
                cfg.phase_bits = None;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_trials() -> usize {
    30
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub base: ScenarioConfig,
    /// Output path prefix.
    #[serde(default)]
    pub out: Option<String>,
    /// AO settings; `phase_levels` is taken from the scenario.
    #[serde(default)]
    pub ao: AoConfig,
    /// Error draws per feasible trial for outage measurement; 0 skips it.
    #[serde(default)]
    pub certify_draws: usize,
    /// Keep wall-clock times; off by default so repeated runs produce
    /// identical files.
    #[serde(default)]
    pub record_timing: bool,
    /// Replaces the scenario seed when set.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() || self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep values must be non-empty and strictly ascending".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        for &v in &self.values {
            self.sweep.apply(&self.base, v)?;
        }
        self.ao.validate()
    }

    pub fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(self.base.rng_seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub feasible: bool,
    pub power_dbm: Option<f64>,
    pub ao_iters: usize,
    pub wall_ms: f64,
    pub max_outage: Option<f64>,
    pub max_crb_fail: Option<f64>,
}

impl TrialRecord {
    pub fn power_w(&self) -> Option<f64> {
        self.power_dbm.map(dbm_to_watts)
    }
}

/// One AO trace with the key of its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sweep: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub trace: Option<AoTrace>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub traces: Vec<TraceRecord>,
}

/// Streams within one trial seed.
const STREAM_CHANNEL: u64 = 0;
const STREAM_AO: u64 = 1;
const STREAM_CERTIFY: u64 = 2;

/// Measures rate outage and CRB failure of a feasible trial's beamformers
/// by direct error sampling. Infeasible records are returned unchanged.
pub fn certify_trial(
    record: TrialRecord,
    real: &ChannelRealization,
    req: &Requirements,
    bf: &BeamformerSet,
    n_draws: usize,
) -> Result<TrialRecord> {
    if !record.feasible || n_draws == 0 {
        return Ok(record);
    }
    let report = empirical_outage(bf, real, req, n_draws, &mut trial_rng(record.seed, STREAM_CERTIFY))?;
    Ok(TrialRecord {
        max_outage: Some(report.max_rate_outage()),
        max_crb_fail: Some(report.max_crb_failure()),
        ..record
    })
}

/// Runs every scheme on one sampled channel.
pub fn run_trial(spec: &ExperimentSpec, value: f64, seed: u64) -> Result<Vec<(TrialRecord, TraceRecord)>> {
    let cfg = spec.sweep.apply(&spec.base, value)?;
    let req = Requirements::from_config(&cfg)?;
    let real = sample_realization(&cfg, &mut trial_rng(seed, STREAM_CHANNEL))?;
    let mut out = Vec::with_capacity(spec.schemes.len());
    for &scheme in &spec.schemes {
        let ao = AoConfig { scheme, phase_levels: cfg.levels(), ..spec.ao };
        let start = Instant::now();
        let result = run_ao(&real, &req, &ao, &mut trial_rng(seed, STREAM_AO));
        let wall = if spec.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let (record, trace) = match result {
            Ok(mut trace) => {
                if !spec.record_timing {
                    for it in &mut trace.iterations {
                        it.transmit_ms = 0.0;
                        it.ris_ms = 0.0;
                    }
                }
                let feasible = trace.status != AoStatus::Infeasible && trace.feasible;
                let record = TrialRecord {
                    sweep: value,
                    seed,
                    scheme,
                    feasible,
                    power_dbm: if feasible { trace.best_power_w.map(watts_to_dbm) } else { None },
                    ao_iters: trace.iterations.len(),
                    wall_ms: wall,
                    max_outage: None,
                    max_crb_fail: None,
                };
                let record = match trace.beamformers() {
                    Some(bf) => certify_trial(record, &real, &req, &bf, spec.certify_draws)?,
                    None => record,
                };
                (record, TraceRecord { sweep: value, seed, scheme, trace: Some(trace), error: None })
            }
            Err(e) => (
                TrialRecord {
                    sweep: value,
                    seed,
                    scheme,
                    feasible: false,
                    power_dbm: None,
                    ao_iters: 0,
                    wall_ms: wall,
                    max_outage: None,
                    max_crb_fail: None,
                },
                TraceRecord { sweep: value, seed, scheme, trace: None, error: Some(e.to_string()) },
            ),
        };
        out.push((record, trace));
    }
    Ok(out)
}

/// Runs all (sweep value, trial) pairs on the current rayon pool. Trial `t`
/// uses seed `base_seed + t` at every sweep value, so positions and fading
/// are shared across the sweep wherever dimensions allow. Output order is
/// fixed by (value, trial, scheme) regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let base = spec.base_seed();
    let jobs: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.trials as u64).map(move |t| (v, base.wrapping_add(t))))
        .collect();
    let results: Vec<Result<Vec<(TrialRecord, TraceRecord)>>> =
        jobs.par_iter().map(|&(v, seed)| run_trial(spec, v, seed)).collect();
    let mut out = ExperimentResult::default();
    for r in results {
        for (rec, tr) in r? {
            out.records.push(rec);
            out.traces.push(tr);
        }
    }
    Ok(out)
}

/// Same as [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}
