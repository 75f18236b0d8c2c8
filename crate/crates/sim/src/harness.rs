//! Seeded Monte Carlo sweeps of capacity ratio versus `T`.
//!
//! Every trial draws its randomness from a seed derived only from
//! `(master_seed, cell, trial_index)`, so results do not depend on worker
//! count, scheduling, or which other cells are part of the sweep. Within a
//! trial all methods see the same channel and combining module, and every
//! SNR value is evaluated on the same draws.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wax_core::baseline;
use wax_core::model::{self, ChannelMatrix, SystemConfig};
use wax_core::optim::{self, OptimOptions};
use wax_core::wax::CombiningModule;
use wax_core::ComplexMatrix;

use crate::error::{Result, SimError};

/// Ratio at or above `1 − LOSSLESS_RATIO_TOL` counts as lossless.
pub const LOSSLESS_RATIO_TOL: f64 = 1e-6;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "WAX_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Baseline,
    Unconstrained,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Proposed, Method::Baseline, Method::Unconstrained, Method::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Baseline => "baseline",
            Method::Unconstrained => "unconstrained",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| SimError::InvalidSpec(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub m: usize,
    pub k: usize,
    pub l_values: Vec<usize>,
    /// Inclusive range of `T`.
    pub t_min: usize,
    pub t_max: usize,
    pub snr_db_values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    /// Draw `A` once per cell instead of once per trial.
    pub fix_a_across_trials: bool,
    pub optim: OptimOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            m: 12,
            k: 4,
            l_values: vec![1, 2, 3],
            t_min: 4,
            t_max: 12,
            snr_db_values: vec![0.0, 20.0],
            trials: 1000,
            master_seed: 0,
            methods: Method::ALL.to_vec(),
            fix_a_across_trials: false,
            optim: OptimOptions::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::InvalidSpec(msg));
        if self.l_values.is_empty() {
            return bad("at least one L value is required".into());
        }
        for &l in &self.l_values {
            model::validate_dims(self.m, self.k, l)?;
        }
        if self.t_min < self.k || self.t_max > self.m || self.t_min > self.t_max {
            return bad(format!("T range {}..={} must lie within [K, M] = [{}, {}]", self.t_min, self.t_max, self.k, self.m));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.snr_db_values.is_empty() || self.snr_db_values.iter().any(|s| !s.is_finite()) {
            return bad("SNR values must be finite and non-empty".into());
        }
        self.optim.validate()?;
        Ok(())
    }

    fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

/// One aggregated `(method, L, T, SNR)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub snr_db: f64,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub n_trials: usize,
    pub lossless_fraction: f64,
    pub mean_iters: f64,
}

/// Per-`(L, T)` counts of trials needing special handling.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub l: usize,
    pub t: usize,
    /// Trials excluded from the unconstrained mean because a block was singular.
    pub unconstrained_singular: usize,
    /// Baseline blocks projected through the degenerate fallback.
    pub baseline_degenerate_blocks: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub diagnostics: Vec<CellDiagnostics>,
}

/// Outcome of one method in one trial. `ratios` has one entry per SNR
/// value; `None` when the trial was skipped for this method.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub ratios: Option<Vec<f64>>,
    pub iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub outcomes: Vec<MethodOutcome>,
    pub unconstrained_singular: bool,
    pub baseline_degenerate_blocks: usize,
}

impl TrialOutcome {
    pub fn ratios(&self, method: Method) -> Option<&[f64]> {
        self.outcomes.iter().find(|o| o.method == method).and_then(|o| o.ratios.as_deref())
    }
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cell key `(L << 32) | T`, independent of the sweep's other cells.
pub fn cell_key(l: usize, t: usize) -> u64 {
    ((l as u64) << 32) | t as u64
}

/// `mix(mix(mix(master) ^ cell) ^ trial)`.
pub fn trial_seed(master_seed: u64, cell: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ cell) ^ trial_index)
}

#[derive(Clone, Copy)]
enum Stream {
    Channel = 1,
    Combiner = 2,
    Optimizer = 3,
    RandomFilter = 4,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ (stream as u64).wrapping_mul(0xA076_1D64_78BD_642F)))
}

fn ratios_for(ch: &ChannelMatrix, g: &ComplexMatrix, snrs: &[f64]) -> Option<Vec<f64>> {
    snrs.iter().map(|&s| model::capacity_ratio(ch, g, s).ok()).collect()
}

/// Runs every requested method on one channel draw for cell `(l, t)`.
pub fn run_trial(spec: &ExperimentSpec, l: usize, t: usize, trial_index: u64) -> Result<TrialOutcome> {
    let cfg = SystemConfig::new(spec.m, spec.k, l, t, 1.0)?;
    let cell = cell_key(l, t);
    let seed = trial_seed(spec.master_seed, cell, trial_index);
    let ch = model::sample_channel(&cfg, &mut stream_rng(seed, Stream::Channel));
    let a_seed = if spec.fix_a_across_trials { trial_seed(spec.master_seed, cell, u64::MAX) } else { seed };
    let a = CombiningModule::random(spec.m, t, &mut stream_rng(a_seed, Stream::Combiner))?;
    let snrs: Vec<f64> = spec.snr_db_values.iter().map(|&db| model::db_to_linear(db)).collect();

    let mut outcomes = Vec::with_capacity(spec.methods.len());
    let mut unconstrained_singular = false;
    let mut baseline_degenerate_blocks = 0;

    let unconstrained = if spec.wants(Method::Unconstrained) || spec.wants(Method::Baseline) {
        Some(baseline::solve_unconstrained(&ch, &a, &cfg)?)
    } else {
        None
    };

    for &method in &spec.methods {
        let outcome = match method {
            Method::Proposed => {
                let r = optim::optimize(&ch, &a, &cfg, &spec.optim, &mut stream_rng(seed, Stream::Optimizer))?;
                let g = r.w.apply(a.matrix());
                MethodOutcome { method, ratios: ratios_for(&ch, &g, &snrs), iters: r.sweeps() }
            }
            Method::Unconstrained => {
                let sol = unconstrained.as_ref().expect("solved above");
                let ratios = match sol.processing_matrix(&a) {
                    Ok(g) => ratios_for(&ch, &g, &snrs),
                    Err(_) => None,
                };
                unconstrained_singular |= ratios.is_none();
                MethodOutcome { method, ratios, iters: 0 }
            }
            Method::Baseline => {
                let proj = baseline::project_to_unitary_blocks(unconstrained.as_ref().expect("solved above"))?;
                baseline_degenerate_blocks += proj.degenerate_blocks.len();
                let g = proj.filter.apply(a.matrix());
                MethodOutcome { method, ratios: ratios_for(&ch, &g, &snrs), iters: 0 }
            }
            Method::Random => {
                let w = baseline::random_isotropic_filter(&cfg, &mut stream_rng(seed, Stream::RandomFilter));
                let g = w.apply(a.matrix());
                MethodOutcome { method, ratios: ratios_for(&ch, &g, &snrs), iters: 0 }
            }
        };
        outcomes.push(outcome);
    }
    Ok(TrialOutcome { outcomes, unconstrained_singular, baseline_degenerate_blocks })
}

fn worker_count(requested: Option<usize>) -> Option<usize> {
    requested.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok())).filter(|&n| n > 0)
}

/// Runs the whole Cartesian product of the spec. `workers` overrides the
/// thread count (otherwise [`WORKERS_ENV`], otherwise rayon's default).
pub fn run_sweep(spec: &ExperimentSpec, workers: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> =
        spec.l_values.iter().flat_map(|&l| (spec.t_min..=spec.t_max).map(move |t| (l, t))).collect();
    let jobs: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|c| (0..spec.trials as u64).map(move |i| (c, i))).collect();

    let execute = || -> Vec<Result<TrialOutcome>> {
        jobs.par_iter().map(|&(c, i)| run_trial(spec, cells[c].0, cells[c].1, i)).collect()
    };
    let outcomes = match worker_count(workers) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::InvalidSpec(format!("cannot start {n} workers: {e}")))?
            .install(execute),
        None => execute(),
    };
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(spec, &cells, &outcomes))
}

fn aggregate(spec: &ExperimentSpec, cells: &[(usize, usize)], outcomes: &[TrialOutcome]) -> SweepResult {
    let mut result = SweepResult::default();
    for (c, &(l, t)) in cells.iter().enumerate() {
        let trials = &outcomes[c * spec.trials..(c + 1) * spec.trials];
        result.diagnostics.push(CellDiagnostics {
            l,
            t,
            unconstrained_singular: trials.iter().filter(|o| o.unconstrained_singular).count(),
            baseline_degenerate_blocks: trials.iter().map(|o| o.baseline_degenerate_blocks).sum(),
        });
        for (s, &snr_db) in spec.snr_db_values.iter().enumerate() {
            for &method in &spec.methods {
                let mut ratios = Vec::with_capacity(trials.len());
                let mut iters = 0usize;
                for o in trials {
                    let mo = o.outcomes.iter().find(|x| x.method == method).expect("method evaluated");
                    if let Some(r) = &mo.ratios {
                        ratios.push(r[s]);
                        iters += mo.iters;
                    }
                }
                result.rows.push(summarize(method, l, t, snr_db, &ratios, iters));
            }
        }
    }
    result
}

fn summarize(method: Method, l: usize, t: usize, snr_db: f64, ratios: &[f64], iters: usize) -> SweepRow {
    let n = ratios.len();
    let (mean, std, lossless, mean_iters) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let nf = n as f64;
        let mean = ratios.iter().sum::<f64>() / nf;
        let var = if n > 1 { ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
        let lossless = ratios.iter().filter(|&&r| r >= 1.0 - LOSSLESS_RATIO_TOL).count() as f64 / nf;
        (mean, var.sqrt(), lossless, iters as f64 / nf)
    };
    SweepRow { method, l, t, snr_db, mean_ratio: mean, std_ratio: std, n_trials: n, lossless_fraction: lossless, mean_iters }
}

impl SweepResult {
    pub fn row(&self, method: Method, l: usize, t: usize, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method && r.l == l && r.t == t && r.snr_db == snr_db)
    }
}
