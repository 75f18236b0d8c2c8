//! CSV and JSON emission of sweep results.
//!
//! CSV columns are fixed:
//! `method,L,T,snr_db,mean_ratio,std_ratio,n_trials,lossless_fraction,mean_iters`.
//! Real numbers are rounded to 12 significant digits and printed in their
//! shortest round-trip form, so re-parsing a file yields the same rows.
//! The JSON document carries the same rows plus the experiment spec and
//! per-cell diagnostics.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::harness::{CellDiagnostics, ExperimentSpec, SweepResult, SweepRow};

pub const CSV_HEADER: [&str; 9] =
    ["method", "L", "T", "snr_db", "mean_ratio", "std_ratio", "n_trials", "lossless_fraction", "mean_iters"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt_num(x: f64) -> String {
    let r = round_sig12(x);
    if r.is_nan() {
        "NaN".into()
    } else {
        format!("{r}")
    }
}

fn rounded(row: &SweepRow) -> SweepRow {
    SweepRow {
        snr_db: round_sig12(row.snr_db),
        mean_ratio: round_sig12(row.mean_ratio),
        std_ratio: round_sig12(row.std_ratio),
        lossless_fraction: round_sig12(row.lossless_fraction),
        mean_iters: round_sig12(row.mean_iters),
        ..row.clone()
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.l.to_string(),
            r.t.to_string(),
            fmt_num(r.snr_db),
            fmt_num(r.mean_ratio),
            fmt_num(r.std_ratio),
            r.n_trials.to_string(),
            fmt_num(r.lossless_fraction),
            fmt_num(r.mean_iters),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<SweepRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<SweepRow>,
    pub diagnostics: Vec<CellDiagnostics>,
}

pub fn write_json<W: Write>(spec: &ExperimentSpec, result: &SweepResult, out: W) -> serde_json::Result<()> {
    let report = JsonReport {
        spec: spec.clone(),
        rows: result.rows.iter().map(rounded).collect(),
        diagnostics: result.diagnostics.clone(),
    };
    serde_json::to_writer_pretty(out, &report)
}

/// Writes `result` to `path` in the given format.
pub fn emit(spec: &ExperimentSpec, result: &SweepResult, format: Format, path: &Path) -> Result<()> {
    let io_err = |source: io::Error| SimError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(&result.rows, &mut out).map_err(|source| SimError::Csv { path: path.to_path_buf(), source })?,
        Format::Json => {
            write_json(spec, result, &mut out).map_err(|source| SimError::Json { path: path.to_path_buf(), source })?
        }
    }
    out.flush().map_err(io_err)
}

pub fn load_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let pb = || PathBuf::from(path);
    let file = File::open(path).map_err(|source| SimError::Io { path: pb(), source })?;
    read_csv(file).map_err(|source| SimError::Csv { path: pb(), source })
}
