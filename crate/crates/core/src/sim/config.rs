use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, TrafficClass};
use crate::beam::{AntennaConfig, LinkConfig};
use crate::clustering::InitStrategy;
use crate::traffic::TrafficConfig;

use super::SimError;

/// Which positions feed the clustering step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// K-means on the localizer's point estimates.
    KmeansWithError,
    /// UK-means on the full uncertainty PDFs.
    UkmeansWithError,
    /// K-means on true positions.
    KmeansExact,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::KmeansWithError, Scenario::UkmeansWithError, Scenario::KmeansExact];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::KmeansWithError => "kmeans_with_error",
            Scenario::UkmeansWithError => "ukmeans_with_error",
            Scenario::KmeansExact => "kmeans_exact",
        }
    }

    pub fn from_name(s: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s)
    }
}

/// How localization error is synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Report uniformly displaced within a disk of radius `rmse * sqrt(2)`,
    /// described by a uniform-disk PDF of the same radius.
    UniformDisk,
    /// Angular ambiguity: two candidate positions at the true range,
    /// `separation_deg` apart around the gNB, weighted `primary_weight` and
    /// `1 - primary_weight`. The truth is the primary candidate with
    /// probability `primary_weight`, so the PDF is calibrated.
    TwoMode { separation_deg: f64, primary_weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams {
    pub max_iterations: usize,
    pub convergence_epsilon: f64,
    pub init_strategy: InitStrategy,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self { max_iterations: 100, convergence_epsilon: 1e-6, init_strategy: InitStrategy::FarthestFirst }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n_clusters: usize,
    pub urllc_per_cluster: usize,
    pub embb_per_cluster: usize,
    pub n_beams: usize,
    pub beam_width_deg: f64,
    pub cell_radius_m: f64,
    pub error_rmse_m: f64,
    pub error_model: ErrorModel,
    pub tti_count: u64,
    pub tti_duration_s: f64,
    pub move_interval_ttis: u64,
    pub qos_latency_s: f64,
    pub qos_sinr_db: f64,
    pub rbg_count: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub confidence_level: f64,
    pub traffic: TrafficConfig,
    pub antenna: AntennaConfig,
    pub link: LinkConfig,
    /// `action_count` and `seed` are overridden per run and beam.
    pub agent: AgentConfig,
    pub clustering: ClusteringParams,
    pub position_trace: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::UkmeansWithError,
            n_clusters: 3,
            urllc_per_cluster: 1,
            embb_per_cluster: 1,
            n_beams: 3,
            beam_width_deg: 20.0,
            cell_radius_m: 160.0,
            error_rmse_m: 8.0,
            error_model: ErrorModel::UniformDisk,
            tti_count: 1400,
            tti_duration_s: 1.25e-4,
            move_interval_ttis: 10,
            qos_latency_s: 1e-3,
            qos_sinr_db: 15.0,
            rbg_count: 24,
            runs: 5,
            master_seed: 1,
            confidence_level: 0.95,
            traffic: TrafficConfig::default(),
            antenna: AntennaConfig::default(),
            link: LinkConfig::default(),
            agent: AgentConfig::default(),
            clustering: ClusteringParams::default(),
            position_trace: None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_scenario(scenario: Scenario) -> Self {
        Self { scenario, ..Self::default() }
    }

    pub fn n_ues(&self) -> usize {
        self.n_clusters * (self.urllc_per_cluster + self.embb_per_cluster)
    }

    /// UEs alternate classes in blocks: within every group of
    /// `urllc + embb` ids the first `urllc` are URLLC.
    pub fn class_of(&self, ue: usize) -> TrafficClass {
        let group = self.urllc_per_cluster + self.embb_per_cluster;
        if ue % group < self.urllc_per_cluster {
            TrafficClass::Urllc
        } else {
            TrafficClass::Embb
        }
    }

    pub fn qos_latency_ttis(&self) -> f64 {
        self.qos_latency_s / self.tti_duration_s
    }

    pub fn beam_width_rad(&self) -> f64 {
        self.beam_width_deg.to_radians()
    }

    /// The exact-location scenario never sees localization error.
    pub fn effective_error_rmse(&self) -> f64 {
        match self.scenario {
            Scenario::KmeansExact => 0.0,
            _ => self.error_rmse_m,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n_clusters == 0 || self.n_beams == 0 || self.rbg_count == 0 || self.runs == 0 {
            return bad("n_clusters, n_beams, rbg_count and runs must be at least 1".into());
        }
        if self.urllc_per_cluster + self.embb_per_cluster == 0 {
            return bad("at least one UE per cluster is required".into());
        }
        if self.tti_count == 0 || self.move_interval_ttis == 0 {
            return bad("tti_count and move_interval_ttis must be at least 1".into());
        }
        if !(self.beam_width_deg > 0.0 && self.beam_width_deg < 180.0) {
            return bad(format!("beam width must lie in (0, 180) degrees, got {}", self.beam_width_deg));
        }
        for (name, v) in [
            ("cell_radius_m", self.cell_radius_m),
            ("tti_duration_s", self.tti_duration_s),
            ("qos_latency_s", self.qos_latency_s),
        ] {
            if !positive(v) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.error_rmse_m.is_finite() && self.error_rmse_m >= 0.0) {
            return bad(format!("error_rmse_m must be >= 0, got {}", self.error_rmse_m));
        }
        if let ErrorModel::TwoMode { separation_deg, primary_weight } = self.error_model {
            if !(separation_deg.is_finite() && (0.0..=180.0).contains(&separation_deg)) {
                return bad(format!("two-mode separation must lie in [0, 180] degrees, got {separation_deg}"));
            }
            if !(0.5..=1.0).contains(&primary_weight) {
                return bad(format!("two-mode primary weight must lie in [0.5, 1], got {primary_weight}"));
            }
        }
        if !self.qos_sinr_db.is_finite() {
            return bad("qos_sinr_db must be finite".into());
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return bad(format!("confidence level must lie in (0, 1), got {}", self.confidence_level));
        }
        if !(self.traffic.load_bps.is_finite() && self.traffic.load_bps >= 0.0) || self.traffic.packet_size_bytes == 0 {
            return bad("traffic load must be >= 0 and packets at least one byte".into());
        }
        let a = &self.antenna;
        if a.n_elements == 0
            || !positive(a.element_spacing_over_wavelength)
            || !positive(a.carrier_frequency_hz)
            || !a.tx_power_dbm.is_finite()
            || !a.noise_power_dbm.is_finite()
        {
            return bad("antenna: elements >= 1, spacing and carrier > 0, finite powers".into());
        }
        if !self.link.thresholds_valid() || !positive(self.link.subcarrier_spacing_hz) || self.link.rbs_per_rbg == 0 {
            return bad("link: 15 ascending CQI thresholds, positive subcarrier spacing and RBG size".into());
        }
        if self.clustering.max_iterations == 0
            || !(self.clustering.convergence_epsilon.is_finite() && self.clustering.convergence_epsilon >= 0.0)
        {
            return bad("clustering: max_iterations >= 1 and epsilon >= 0".into());
        }
        self.agent.validate().map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = ScenarioConfig::default();
        assert_eq!(c.n_ues(), 6);
        assert_eq!(c.qos_latency_ttis(), 8.0);
        assert!(c.validate().is_ok());
        assert_eq!(c.class_of(0), TrafficClass::Urllc);
        assert_eq!(c.class_of(1), TrafficClass::Embb);
        assert_eq!(c.class_of(4), TrafficClass::Urllc);
    }

    #[test]
    fn exact_scenario_has_no_error() {
        let c = ScenarioConfig::with_scenario(Scenario::KmeansExact);
        assert_eq!(c.effective_error_rmse(), 0.0);
        assert_eq!(ScenarioConfig::default().effective_error_rmse(), 8.0);
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::from_name(s.name()), Some(s));
        }
        assert_eq!(Scenario::from_name("nope"), None);
    }

    #[test]
    fn rejects_bad_values() {
        let ok = ScenarioConfig::default();
        assert!(ScenarioConfig { n_beams: 0, ..ok.clone() }.validate().is_err());
        assert!(ScenarioConfig { beam_width_deg: 180.0, ..ok.clone() }.validate().is_err());
        assert!(ScenarioConfig { error_rmse_m: -1.0, ..ok.clone() }.validate().is_err());
        let two = ErrorModel::TwoMode { separation_deg: 20.0, primary_weight: 0.3 };
        assert!(ScenarioConfig { error_model: two, ..ok.clone() }.validate().is_err());
        let mut agent = ok.agent.clone();
        agent.epsilon = 1.5;
        assert!(ScenarioConfig { agent, ..ok }.validate().is_err());
    }
}
