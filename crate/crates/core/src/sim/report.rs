use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Scenario, ScenarioConfig};
use super::engine::{Simulation, TtiRecord};
use super::seed::split_seed;
use super::trace::PositionTrace;
use super::SimError;
use crate::stats::{confidence_interval_at, Interval};

/// Metric names, in output order.
pub const METRICS: [&str; 3] = ["coverage_rate", "sum_rate_bps", "mean_delay_ttis"];

/// Run-level aggregates, each a pure function of the run's TTI records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    /// Mean over TTIs of the per-TTI coverage rate.
    pub coverage_rate: f64,
    /// Delivered bits over simulated time, all UEs.
    pub sum_rate_bps: f64,
    /// Mean packet delay in TTIs. Packets still queued at the end count with
    /// their age at that point. `None` if no packet ever arrived.
    pub mean_delay_ttis: Option<f64>,
}

impl RunMetrics {
    pub fn from_records(records: &[TtiRecord], tti_duration_s: f64) -> Self {
        let n = records.len();
        let coverage_rate = if n == 0 { 0.0 } else { records.iter().map(|r| r.coverage_rate).sum::<f64>() / n as f64 };
        let bits: u64 = records.iter().map(|r| r.delivered_bits).sum();
        let sum_rate_bps = if n == 0 { 0.0 } else { bits as f64 / (n as f64 * tti_duration_s) };
        let delivered: u64 = records.iter().map(|r| r.delivered_packets).sum();
        let delay: u64 = records.iter().map(|r| r.delay_sum_ttis).sum();
        let (queued, age) = records.last().map_or((0, 0), |r| (r.queued_packets, r.queued_age_sum_ttis));
        let packets = delivered + queued;
        let mean_delay_ttis = (packets > 0).then(|| (delay + age) as f64 / packets as f64);
        Self { coverage_rate, sum_rate_bps, mean_delay_ttis }
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "coverage_rate" => Some(self.coverage_rate),
            "sum_rate_bps" => Some(self.sum_rate_bps),
            "mean_delay_ttis" => self.mean_delay_ttis,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub run: usize,
    pub seed: u64,
    pub records: Vec<TtiRecord>,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    /// Runs that produced a value for this metric.
    pub samples: usize,
    pub interval: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: Scenario,
    pub runs: Vec<RunOutput>,
    pub summary: Vec<MetricSummary>,
}

impl RunReport {
    pub fn metric_values(&self, metric: &str) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.metrics.get(metric)).collect()
    }

    pub fn summary_of(&self, metric: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.metric == metric)
    }
}

/// Seed of run `i`.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    split_seed(master_seed, run as u64)
}

/// Runs `cfg.runs` independent replications in parallel on the current rayon
/// pool. Results do not depend on the pool size.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, SimError> {
    cfg.validate()?;
    if let Some(path) = &cfg.position_trace {
        PositionTrace::load(path)?
            .check_population(cfg.n_ues())
            .map_err(|message| SimError::Trace { path: path.clone(), message })?;
    }
    let runs = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let seed = run_seed(cfg.master_seed, i);
            let records = Simulation::new(cfg, seed)?.run_to_end()?;
            let metrics = RunMetrics::from_records(&records, cfg.tti_duration_s);
            Ok(RunOutput { run: i, seed, records, metrics })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let summary = summarize(&runs, cfg.confidence_level);
    Ok(RunReport { scenario: cfg.scenario, runs, summary })
}

pub fn summarize(runs: &[RunOutput], level: f64) -> Vec<MetricSummary> {
    METRICS
        .iter()
        .map(|&metric| {
            let values: Vec<f64> = runs.iter().filter_map(|r| r.metrics.get(metric)).collect();
            let interval = (!values.is_empty()).then(|| confidence_interval_at(&values, level));
            MetricSummary { metric, samples: values.len(), interval }
        })
        .collect()
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Per-(run, TTI) rows. The leading five columns are the report format; the
/// rest carry the raw counters every aggregate is computed from.
pub fn write_ticks_csv<W: Write>(report: &RunReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run",
        "tti",
        "coverage_rate",
        "delivered_bits",
        "mean_delay_ttis",
        "delivered_packets",
        "delay_sum_ttis",
        "queued_packets",
        "queued_age_sum_ttis",
        "allocated_bits",
        "arrivals",
        "beams",
    ])?;
    for run in &report.runs {
        for r in &run.records {
            w.write_record([
                run.run.to_string(),
                r.tti.to_string(),
                r.coverage_rate.to_string(),
                r.delivered_bits.to_string(),
                fmt_opt(r.mean_delay_ttis()),
                r.delivered_packets.to_string(),
                r.delay_sum_ttis.to_string(),
                r.queued_packets.to_string(),
                r.queued_age_sum_ttis.to_string(),
                r.allocated_bits.to_string(),
                r.arrivals.to_string(),
                r.beams.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `scenario,metric,mean,ci95_halfwidth` rows for each report.
pub fn write_summary_csv<W: Write>(reports: &[RunReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "metric", "mean", "ci95_halfwidth"])?;
    for report in reports {
        for s in &report.summary {
            w.write_record([
                report.scenario.name().to_string(),
                s.metric.to_string(),
                fmt_opt(s.interval.map(|i| i.mean)),
                fmt_opt(s.interval.and_then(|i| i.half_width)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
