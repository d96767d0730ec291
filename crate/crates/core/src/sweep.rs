//! Runs every cell of a [`SweepSpec`] and writes its CSV files.
//!
//! Layout under the output directory:
//!
//! ```text
//! config.toml                      effective configuration
//! sweep.csv                        sweep_variable,value,scenario,metric,mean,ci95_halfwidth
//! <variable>_<value>/<scenario>/
//!     ticks.csv                    per (run, tti) records
//!     summary.csv                  scenario,metric,mean,ci95_halfwidth
//!     runs.csv                     per-run metrics
//! ```
//!
//! Each file is written to a temporary name and renamed into place, so a
//! file either exists complete or not at all.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{emit_config, SweepSpec};
use crate::sim::{run_scenario, write_summary_csv, write_ticks_csv, RunReport, Scenario, SimError, METRICS};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// One cell that did not complete.
#[derive(Debug)]
pub struct CellFailure {
    pub value: f64,
    pub scenario: Scenario,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub completed: usize,
    pub failures: Vec<CellFailure>,
}

pub fn cell_dir(out: &Path, spec: &SweepSpec, value: f64, scenario: Scenario) -> PathBuf {
    out.join(format!("{}_{}", spec.variable.name(), value)).join(scenario.name())
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    let io_err = |source| SweepError::Io { path: path.to_path_buf(), source };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn csv_bytes<F>(write: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf).expect("writing CSV to memory");
    buf
}

fn runs_csv(report: &RunReport) -> Vec<u8> {
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["run".to_string(), "seed".to_string()];
        header.extend(METRICS.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for r in &report.runs {
            let mut row = vec![r.run.to_string(), r.seed.to_string()];
            row.extend(METRICS.iter().map(|m| crate::sim::fmt_opt(r.metrics.get(m))));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn write_cell(dir: &Path, report: &RunReport) -> Result<(), SweepError> {
    fs::create_dir_all(dir).map_err(|source| SweepError::Io { path: dir.to_path_buf(), source })?;
    write_atomic(&dir.join("ticks.csv"), &csv_bytes(|b| write_ticks_csv(report, b)))?;
    write_atomic(&dir.join("runs.csv"), &runs_csv(report))?;
    write_atomic(&dir.join("summary.csv"), &csv_bytes(|b| write_summary_csv(std::slice::from_ref(report), b)))
}

fn sweep_csv(spec: &SweepSpec, reports: &[(f64, RunReport)]) -> Vec<u8> {
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["sweep_variable", "value", "scenario", "metric", "mean", "ci95_halfwidth"])?;
        for (value, report) in reports {
            for s in &report.summary {
                w.write_record([
                    spec.variable.name().to_string(),
                    value.to_string(),
                    report.scenario.name().to_string(),
                    s.metric.to_string(),
                    crate::sim::fmt_opt(s.interval.map(|i| i.mean)),
                    crate::sim::fmt_opt(s.interval.and_then(|i| i.half_width)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

/// Runs all cells on a pool of `jobs` threads. Output bytes do not depend
/// on `jobs`. Failed cells are reported in the outcome; completed cells are
/// written regardless. `Err` is returned only for I/O failures.
pub fn run_sweep(spec: &SweepSpec, out: &Path, jobs: usize) -> Result<SweepOutcome, SweepError> {
    fs::create_dir_all(out).map_err(|source| SweepError::Io { path: out.to_path_buf(), source })?;
    write_atomic(&out.join("config.toml"), emit_config(&spec.effective).as_bytes())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let cells = spec.cells();
    let results: Vec<Result<RunReport, SimError>> =
        pool.install(|| cells.par_iter().map(|(_, cfg)| run_scenario(cfg)).collect());

    let mut outcome = SweepOutcome::default();
    let mut done = Vec::new();
    for ((value, cfg), result) in cells.into_iter().zip(results) {
        match result {
            Ok(report) => {
                write_cell(&cell_dir(out, spec, value, cfg.scenario), &report)?;
                outcome.completed += 1;
                done.push((value, report));
            }
            Err(e) => outcome.failures.push(CellFailure { value, scenario: cfg.scenario, error: e.to_string() }),
        }
    }
    write_atomic(&out.join("sweep.csv"), &sweep_csv(spec, &done))?;
    Ok(outcome)
}
