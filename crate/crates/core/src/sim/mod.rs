//! TTI-stepped simulation of one gNB cell.
//!
//! Every TTI follows the same order: packet arrivals, UE movement and
//! re-localization, clustering, beam formation, per-beam DRL scheduling,
//! queue service, agent training, metrics.

mod config;
mod engine;
mod report;
mod seed;
mod trace;

pub use config::{ClusteringParams, ErrorModel, Scenario, ScenarioConfig};
pub use engine::{
    inject_error, inject_two_mode_error, move_ues, uniform_in_cell, Simulation, TtiRecord, UserEquipment,
};
pub(crate) use report::fmt_opt;
pub use report::{
    run_scenario, run_seed, summarize, write_summary_csv, write_ticks_csv, MetricSummary, RunMetrics, RunOutput,
    RunReport, METRICS,
};
pub use seed::{split_seed, splitmix64, Stream};
pub use trace::{PositionTrace, TraceRow};

use std::path::PathBuf;

use thiserror::Error;

use crate::agent::AgentConfigError;
use crate::clustering::ClusteringError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Agent(#[from] AgentConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("position trace {}: {message}", path.display())]
    Trace { path: PathBuf, message: String },
}
