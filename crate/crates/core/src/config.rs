//! Experiment configuration files.
//!
//! A config file is TOML with flat, unit-suffixed keys; every key is
//! optional and defaults to the reference setup, so an empty file is a valid
//! configuration. Unknown keys are rejected. See `docs/config.md` for the
//! full key list.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::AgentConfig;
use crate::beam::{AntennaConfig, LinkConfig};
use crate::clustering::InitStrategy;
use crate::sim::{ClusteringParams, ErrorModel, Scenario, ScenarioConfig};
use crate::traffic::TrafficConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Range { key: String, line: Option<usize>, message: String },
}

/// Parameter varied across sweep cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NBeams,
    BeamWidthDeg,
    LoadBps,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::NBeams => "n_beams",
            SweepVariable::BeamWidthDeg => "beam_width_deg",
            SweepVariable::LoadBps => "load_bps",
        }
    }

    fn base_value(&self, cfg: &ScenarioConfig) -> f64 {
        match self {
            SweepVariable::NBeams => cfg.n_beams as f64,
            SweepVariable::BeamWidthDeg => cfg.beam_width_deg,
            SweepVariable::LoadBps => cfg.traffic.load_bps,
        }
    }

    /// `cfg` with this variable set to `value`.
    pub fn apply(&self, cfg: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut c = cfg.clone();
        match self {
            SweepVariable::NBeams => c.n_beams = value as usize,
            SweepVariable::BeamWidthDeg => c.beam_width_deg = value,
            SweepVariable::LoadBps => c.traffic.load_bps = value,
        }
        c
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModelKind {
    UniformDisk,
    TwoMode,
}

/// On-disk form of a configuration. Field names are the file's keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub sweep_variable: SweepVariable,
    /// Defaults to the single base value of `sweep_variable`.
    pub sweep_values: Option<Vec<f64>>,
    pub scenarios: Vec<Scenario>,
    pub runs: usize,
    pub master_seed: u64,
    pub confidence_level: f64,

    pub n_clusters: usize,
    pub urllc_per_cluster: usize,
    pub embb_per_cluster: usize,
    pub n_beams: usize,
    pub beam_width_deg: f64,
    pub cell_radius_m: f64,
    pub error_rmse_m: f64,
    pub error_model: ErrorModelKind,
    pub two_mode_separation_deg: f64,
    pub two_mode_primary_weight: f64,
    /// CSV of `tti,ue_id,x_m,y_m`; relative paths resolve against the
    /// config file's directory.
    pub position_trace: Option<String>,

    pub tti_count: u64,
    pub tti_duration_s: f64,
    pub move_interval_ttis: u64,
    pub qos_latency_s: f64,
    pub qos_sinr_db: f64,
    pub rbg_count: usize,

    pub load_bps: f64,
    pub packet_size_bytes: u32,

    pub n_elements: usize,
    pub element_spacing_wavelengths: f64,
    pub carrier_frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub cqi_thresholds_db: Vec<f64>,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers_per_rb: usize,
    pub rbs_per_rbg: usize,

    /// Tabular Q-learning rate of the reference setup. Recorded for
    /// provenance only; the network uses `learning_rate`.
    pub q_learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub input_size: usize,
    pub hidden_units: usize,
    pub minibatch_size: usize,
    pub replay_capacity: usize,
    pub train_interval_ttis: u64,
    pub target_copy_interval_ttis: u64,
    pub init_scale: f64,

    pub max_iterations: usize,
    pub convergence_epsilon: f64,
    pub init_strategy: InitStrategy,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            sweep_variable: SweepVariable::NBeams,
            sweep_values: None,
            scenarios: Scenario::ALL.to_vec(),
            runs: s.runs,
            master_seed: s.master_seed,
            confidence_level: s.confidence_level,
            n_clusters: s.n_clusters,
            urllc_per_cluster: s.urllc_per_cluster,
            embb_per_cluster: s.embb_per_cluster,
            n_beams: s.n_beams,
            beam_width_deg: s.beam_width_deg,
            cell_radius_m: s.cell_radius_m,
            error_rmse_m: s.error_rmse_m,
            error_model: ErrorModelKind::UniformDisk,
            two_mode_separation_deg: 24.0,
            two_mode_primary_weight: 0.6,
            position_trace: None,
            tti_count: s.tti_count,
            tti_duration_s: s.tti_duration_s,
            move_interval_ttis: s.move_interval_ttis,
            qos_latency_s: s.qos_latency_s,
            qos_sinr_db: s.qos_sinr_db,
            rbg_count: s.rbg_count,
            load_bps: s.traffic.load_bps,
            packet_size_bytes: s.traffic.packet_size_bytes,
            n_elements: s.antenna.n_elements,
            element_spacing_wavelengths: s.antenna.element_spacing_over_wavelength,
            carrier_frequency_hz: s.antenna.carrier_frequency_hz,
            tx_power_dbm: s.antenna.tx_power_dbm,
            noise_power_dbm: s.antenna.noise_power_dbm,
            cqi_thresholds_db: s.link.cqi_thresholds_db,
            subcarrier_spacing_hz: s.link.subcarrier_spacing_hz,
            subcarriers_per_rb: s.link.subcarriers_per_rb,
            rbs_per_rbg: s.link.rbs_per_rbg,
            q_learning_rate: 0.5,
            gamma: s.agent.gamma,
            epsilon: s.agent.epsilon,
            learning_rate: s.agent.learning_rate,
            input_size: s.agent.input_size,
            hidden_units: s.agent.hidden_units,
            minibatch_size: s.agent.minibatch,
            replay_capacity: s.agent.replay_capacity,
            train_interval_ttis: s.agent.train_interval_ttis,
            target_copy_interval_ttis: s.agent.target_copy_interval_ttis,
            init_scale: s.agent.init_scale,
            max_iterations: s.clustering.max_iterations,
            convergence_epsilon: s.clustering.convergence_epsilon,
            init_strategy: s.clustering.init_strategy,
        }
    }
}

/// A validated experiment: one base configuration per scenario, swept over
/// `values` of `variable`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    /// Shared settings; `scenario` is replaced per cell.
    pub base: ScenarioConfig,
    /// The file form, with defaults and `sweep_values` filled in.
    pub effective: ConfigFile,
}

impl SweepSpec {
    /// Base configuration of one scenario.
    pub fn base_for(&self, scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig { scenario, ..self.base.clone() }
    }

    /// All cells in output order: by value, then scenario.
    pub fn cells(&self) -> Vec<(f64, ScenarioConfig)> {
        self.values
            .iter()
            .flat_map(|&v| self.scenarios.iter().map(move |&s| (v, self.variable.apply(&self.base_for(s), v))))
            .collect()
    }

    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.base.master_seed = seed;
        self.effective.master_seed = seed;
        self
    }
}

impl ConfigFile {
    pub fn scenario_config(&self, base_dir: &Path) -> ScenarioConfig {
        ScenarioConfig {
            scenario: self.scenarios.first().copied().unwrap_or(Scenario::UkmeansWithError),
            n_clusters: self.n_clusters,
            urllc_per_cluster: self.urllc_per_cluster,
            embb_per_cluster: self.embb_per_cluster,
            n_beams: self.n_beams,
            beam_width_deg: self.beam_width_deg,
            cell_radius_m: self.cell_radius_m,
            error_rmse_m: self.error_rmse_m,
            error_model: match self.error_model {
                ErrorModelKind::UniformDisk => ErrorModel::UniformDisk,
                ErrorModelKind::TwoMode => ErrorModel::TwoMode {
                    separation_deg: self.two_mode_separation_deg,
                    primary_weight: self.two_mode_primary_weight,
                },
            },
            tti_count: self.tti_count,
            tti_duration_s: self.tti_duration_s,
            move_interval_ttis: self.move_interval_ttis,
            qos_latency_s: self.qos_latency_s,
            qos_sinr_db: self.qos_sinr_db,
            rbg_count: self.rbg_count,
            runs: self.runs,
            master_seed: self.master_seed,
            confidence_level: self.confidence_level,
            traffic: TrafficConfig { load_bps: self.load_bps, packet_size_bytes: self.packet_size_bytes },
            antenna: AntennaConfig {
                n_elements: self.n_elements,
                element_spacing_over_wavelength: self.element_spacing_wavelengths,
                carrier_frequency_hz: self.carrier_frequency_hz,
                tx_power_dbm: self.tx_power_dbm,
                noise_power_dbm: self.noise_power_dbm,
            },
            link: LinkConfig {
                cqi_thresholds_db: self.cqi_thresholds_db.clone(),
                subcarrier_spacing_hz: self.subcarrier_spacing_hz,
                subcarriers_per_rb: self.subcarriers_per_rb,
                rbs_per_rbg: self.rbs_per_rbg,
            },
            agent: AgentConfig {
                gamma: self.gamma,
                epsilon: self.epsilon,
                learning_rate: self.learning_rate,
                hidden_units: self.hidden_units,
                input_size: self.input_size,
                minibatch: self.minibatch_size,
                replay_capacity: self.replay_capacity,
                train_interval_ttis: self.train_interval_ttis,
                target_copy_interval_ttis: self.target_copy_interval_ttis,
                init_scale: self.init_scale,
                ..AgentConfig::default()
            },
            clustering: ClusteringParams {
                max_iterations: self.max_iterations,
                convergence_epsilon: self.convergence_epsilon,
                init_strategy: self.init_strategy,
            },
            position_trace: self.position_trace.as_ref().map(|p| base_dir.join(p)),
        }
    }

    /// Key-level range checks, first failure wins.
    fn check(&self) -> Result<(), (&'static str, String)> {
        fn need(ok: bool, key: &'static str, msg: impl Into<String>) -> Result<(), (&'static str, String)> {
            if ok {
                Ok(())
            } else {
                Err((key, msg.into()))
            }
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let prob = |v: f64| (0.0..=1.0).contains(&v);

        if let Some(values) = &self.sweep_values {
            need(!values.is_empty(), "sweep_values", "must not be empty")?;
            for &v in values {
                let ok = match self.sweep_variable {
                    SweepVariable::NBeams => v >= 1.0 && v.fract() == 0.0 && v <= 4096.0,
                    SweepVariable::BeamWidthDeg => v > 0.0 && v < 180.0,
                    SweepVariable::LoadBps => v.is_finite() && v >= 0.0,
                };
                need(ok, "sweep_values", format!("{v} is not a valid {}", self.sweep_variable))?;
            }
        }
        need(!self.scenarios.is_empty(), "scenarios", "must list at least one scenario")?;
        let mut seen = self.scenarios.clone();
        seen.sort();
        seen.dedup();
        need(seen.len() == self.scenarios.len(), "scenarios", "must not repeat a scenario")?;
        need(self.runs >= 1, "runs", "must be at least 1")?;
        need(self.master_seed <= i64::MAX as u64, "master_seed", "must be below 2^63")?;
        need(self.confidence_level > 0.0 && self.confidence_level < 1.0, "confidence_level", "must lie in (0, 1)")?;
        need(self.n_clusters >= 1, "n_clusters", "must be at least 1")?;
        need(self.urllc_per_cluster + self.embb_per_cluster >= 1, "embb_per_cluster", "clusters need at least one UE")?;
        need(self.n_beams >= 1, "n_beams", "must be at least 1")?;
        need(self.beam_width_deg > 0.0 && self.beam_width_deg < 180.0, "beam_width_deg", "must lie in (0, 180)")?;
        need(pos(self.cell_radius_m), "cell_radius_m", "must be positive")?;
        need(self.error_rmse_m.is_finite() && self.error_rmse_m >= 0.0, "error_rmse_m", "must be >= 0")?;
        need((0.0..=180.0).contains(&self.two_mode_separation_deg), "two_mode_separation_deg", "must lie in [0, 180]")?;
        need((0.5..=1.0).contains(&self.two_mode_primary_weight), "two_mode_primary_weight", "must lie in [0.5, 1]")?;
        need(self.tti_count >= 1, "tti_count", "must be at least 1")?;
        need(pos(self.tti_duration_s), "tti_duration_s", "must be positive")?;
        need(self.move_interval_ttis >= 1, "move_interval_ttis", "must be at least 1")?;
        need(pos(self.qos_latency_s), "qos_latency_s", "must be positive")?;
        need(self.qos_sinr_db.is_finite(), "qos_sinr_db", "must be finite")?;
        need(self.rbg_count >= 1, "rbg_count", "must be at least 1")?;
        need(self.load_bps.is_finite() && self.load_bps >= 0.0, "load_bps", "must be >= 0")?;
        need(self.packet_size_bytes >= 1, "packet_size_bytes", "must be at least 1")?;
        need(self.n_elements >= 1, "n_elements", "must be at least 1")?;
        need(pos(self.element_spacing_wavelengths), "element_spacing_wavelengths", "must be positive")?;
        need(pos(self.carrier_frequency_hz), "carrier_frequency_hz", "must be positive")?;
        need(self.tx_power_dbm.is_finite(), "tx_power_dbm", "must be finite")?;
        need(self.noise_power_dbm.is_finite(), "noise_power_dbm", "must be finite")?;
        need(
            LinkConfig { cqi_thresholds_db: self.cqi_thresholds_db.clone(), ..LinkConfig::default() }
                .thresholds_valid(),
            "cqi_thresholds_db",
            "must hold 15 finite ascending values",
        )?;
        need(pos(self.subcarrier_spacing_hz), "subcarrier_spacing_hz", "must be positive")?;
        need(self.subcarriers_per_rb >= 1, "subcarriers_per_rb", "must be at least 1")?;
        need(self.rbs_per_rbg >= 1, "rbs_per_rbg", "must be at least 1")?;
        need(self.q_learning_rate.is_finite(), "q_learning_rate", "must be finite")?;
        need(prob(self.gamma), "gamma", "must lie in [0, 1]")?;
        need(prob(self.epsilon), "epsilon", "must lie in [0, 1]")?;
        need(pos(self.learning_rate), "learning_rate", "must be positive")?;
        need(self.input_size == 1, "input_size", "the state is a single encoded CQI, must be 1")?;
        need(self.hidden_units >= 1, "hidden_units", "must be at least 1")?;
        need(self.minibatch_size >= 1, "minibatch_size", "must be at least 1")?;
        need(self.replay_capacity >= self.minibatch_size, "replay_capacity", "must be >= minibatch_size")?;
        need(self.train_interval_ttis >= 1, "train_interval_ttis", "must be at least 1")?;
        need(self.target_copy_interval_ttis >= 1, "target_copy_interval_ttis", "must be at least 1")?;
        need(self.init_scale.is_finite() && self.init_scale >= 0.0, "init_scale", "must be >= 0")?;
        need(self.max_iterations >= 1, "max_iterations", "must be at least 1")?;
        need(
            self.convergence_epsilon.is_finite() && self.convergence_epsilon >= 0.0,
            "convergence_epsilon",
            "must be >= 0",
        )?;
        Ok(())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which `key` is assigned, if it is.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| l.trim_start().strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('=')))
        .map(|i| i + 1)
}

/// Parses config text. Relative trace paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<SweepSpec, ConfigError> {
    let mut file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map_or(1, |s| line_of_offset(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    file.check().map_err(|(key, message)| ConfigError::Range {
        key: key.into(),
        line: line_of_key(text, key),
        message,
    })?;
    let base = file.scenario_config(base_dir);
    let values = file.sweep_values.get_or_insert_with(|| vec![file.sweep_variable.base_value(&base)]).clone();
    for &v in &values {
        file.sweep_variable.apply(&base, v).validate().map_err(|e| ConfigError::Range {
            key: file.sweep_variable.name().into(),
            line: line_of_key(text, "sweep_values"),
            message: e.to_string(),
        })?;
    }
    Ok(SweepSpec { variable: file.sweep_variable, values, scenarios: file.scenarios.clone(), base, effective: file })
}

pub fn parse_config(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, dir)
}

/// Effective configuration as config-file text.
pub fn emit_config(file: &ConfigFile) -> String {
    toml::to_string(file).expect("config fields are TOML-representable")
}
