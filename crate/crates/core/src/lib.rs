//! Single-cell mmWave downlink simulator: clustering of UEs under
//! localization uncertainty, beam formation toward cluster centroids and
//! per-beam LSTM-DQN resource block group scheduling.

pub mod agent;
pub mod beam;
pub mod clustering;
pub mod config;
pub mod geometry;
pub mod sim;
pub mod stats;
pub mod sweep;
pub mod traffic;

pub use agent::{Agent, AgentConfig, TrafficClass};
pub use beam::{AntennaConfig, Beam, LinkConfig};
pub use clustering::{ClusteringConfig, ClusteringResult, InitStrategy};
pub use config::{parse_config, ConfigError, SweepSpec, SweepVariable};
pub use geometry::{Point2D, UncertainPoint, UncertaintyPdf};
pub use sim::{run_scenario, RunReport, Scenario, ScenarioConfig, SimError, Simulation};
pub use traffic::{PacketQueue, TrafficConfig};
