use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ErrorModel, Scenario, ScenarioConfig};
use super::seed::Stream;
use super::trace::PositionTrace;
use super::SimError;
use crate::agent::{encode_state, reward, Agent, AgentConfig, ExperienceTuple, TrafficClass};
use crate::beam::{compute_sinr, coverage_rate, db_to_linear, form_beams, Beam, BeamCluster, LinkQuality};
use crate::clustering::{run_clustering_observed, ClusteringConfig, ClusteringResult};
use crate::geometry::{GeometryError, Point2D, UncertainPoint, UncertaintyPdf};
use crate::traffic::{generate_arrivals, PacketQueue, TrafficConfig};

/// Distances below this are clamped when evaluating path loss.
const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct UserEquipment {
    pub id: usize,
    pub class: TrafficClass,
    pub true_position: Point2D,
    pub reported: UncertainPoint,
    pub queue: PacketQueue,
    pub traffic: TrafficConfig,
}

/// Area-uniform position in the cell disk around `gnb`.
pub fn uniform_in_cell<R: Rng + ?Sized>(radius: f64, gnb: Point2D, rng: &mut R) -> Point2D {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    gnb + Point2D::from_polar(r, theta)
}

/// Localization report with the given RMSE: the reported center is displaced
/// uniformly within a disk of radius `rmse * sqrt(2)` (so the mean squared
/// displacement is `rmse^2`) and carries a uniform-disk PDF of that radius.
pub fn inject_error<R: Rng + ?Sized>(
    id: usize,
    true_position: Point2D,
    error_rmse_m: f64,
    rng: &mut R,
) -> Result<UncertainPoint, GeometryError> {
    let radius = error_rmse_m * std::f64::consts::SQRT_2;
    let truth = UncertaintyPdf::uniform_disk(true_position, radius)?;
    let center = truth.sample(rng);
    UncertainPoint::new(id, UncertaintyPdf::uniform_disk(center, radius)?)
}

/// Two-candidate report, see [`ErrorModel::TwoMode`]. The primary candidate
/// comes first in the sample list and is the localizer's point estimate.
pub fn inject_two_mode_error<R: Rng + ?Sized>(
    id: usize,
    true_position: Point2D,
    gnb: Point2D,
    separation_rad: f64,
    primary_weight: f64,
    rng: &mut R,
) -> Result<UncertainPoint, GeometryError> {
    let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let ghost = true_position.rotate_about(gnb, side * separation_rad);
    let truth_is_primary = rng.random::<f64>() < primary_weight;
    let samples = if truth_is_primary { vec![true_position, ghost] } else { vec![ghost, true_position] };
    UncertainPoint::new(id, UncertaintyPdf::sample_based(samples, vec![primary_weight, 1.0 - primary_weight])?)
}

/// Re-places every UE uniformly in the cell. Reports are refreshed separately.
pub fn move_ues<R: Rng + ?Sized>(ues: &mut [UserEquipment], cell_radius: f64, gnb: Point2D, rng: &mut R) {
    for ue in ues {
        ue.true_position = uniform_in_cell(cell_radius, gnb, rng);
    }
}

/// Metrics of one TTI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtiRecord {
    pub tti: u64,
    pub coverage_rate: f64,
    pub arrivals: u64,
    pub delivered_bits: u64,
    pub delivered_packets: u64,
    pub delay_sum_ttis: u64,
    pub queued_packets: u64,
    /// Sum of ages of packets still queued at the end of the TTI.
    pub queued_age_sum_ttis: u64,
    /// Sum over RBGs of rate x TTI duration.
    pub allocated_bits: f64,
    pub beams: usize,
    pub mean_reward: f64,
}

impl TtiRecord {
    pub fn mean_delay_ttis(&self) -> Option<f64> {
        (self.delivered_packets > 0).then(|| self.delay_sum_ttis as f64 / self.delivered_packets as f64)
    }
}

/// State of one run.
pub struct Simulation {
    cfg: ScenarioConfig,
    gnb: Point2D,
    ues: Vec<UserEquipment>,
    agents: Vec<Agent>,
    mobility: ChaCha8Rng,
    localization: ChaCha8Rng,
    traffic: ChaCha8Rng,
    clustering_seed: u64,
    trace: Option<PositionTrace>,
    centers: Option<Vec<Point2D>>,
    last_clustering: Option<ClusteringResult>,
    beams: Vec<Beam>,
    last_cqi: Vec<u8>,
    tti: u64,
    schedule: bool,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, run_seed: u64) -> Result<Self, SimError> {
        Self::build(cfg, run_seed, true)
    }

    /// Positions, clustering and beams only; no traffic or scheduling. The
    /// coverage sequence is identical to that of a full run with the same seed.
    pub fn coverage_only(cfg: &ScenarioConfig, run_seed: u64) -> Result<Self, SimError> {
        Self::build(cfg, run_seed, false)
    }

    fn build(cfg: &ScenarioConfig, run_seed: u64, schedule: bool) -> Result<Self, SimError> {
        cfg.validate()?;
        let n_ues = cfg.n_ues();
        let trace = match &cfg.position_trace {
            Some(path) => {
                let t = PositionTrace::load(path)?;
                t.check_population(n_ues).map_err(|message| SimError::Trace { path: path.clone(), message })?;
                Some(t)
            }
            None => None,
        };

        let mut mobility = ChaCha8Rng::seed_from_u64(Stream::Mobility.seed(run_seed));
        let gnb = Point2D::ORIGIN;
        let mut ues = Vec::with_capacity(n_ues);
        for id in 0..n_ues {
            let pos = match &trace {
                Some(t) => t.rows_at(0).iter().find(|(u, _)| *u == id).map(|(_, p)| *p).expect("checked"),
                None => uniform_in_cell(cfg.cell_radius_m, gnb, &mut mobility),
            };
            ues.push(UserEquipment {
                id,
                class: cfg.class_of(id),
                true_position: pos,
                reported: UncertainPoint::exact(id, pos)?,
                queue: PacketQueue::new(),
                traffic: cfg.traffic.clone(),
            });
        }

        let agents = if schedule {
            (0..cfg.n_beams)
                .map(|b| {
                    Agent::new(AgentConfig {
                        action_count: n_ues,
                        seed: Stream::Agent(b).seed(run_seed),
                        ..cfg.agent.clone()
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };

        let mut sim = Self {
            cfg: cfg.clone(),
            gnb,
            ues,
            agents,
            mobility,
            localization: ChaCha8Rng::seed_from_u64(Stream::Localization.seed(run_seed)),
            traffic: ChaCha8Rng::seed_from_u64(Stream::Traffic.seed(run_seed)),
            clustering_seed: Stream::Clustering.seed(run_seed),
            trace,
            centers: None,
            last_clustering: None,
            beams: Vec::new(),
            last_cqi: vec![0; cfg.n_beams],
            tti: 0,
            schedule,
        };
        for i in 0..sim.ues.len() {
            sim.relocalize(i)?;
        }
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn ues(&self) -> &[UserEquipment] {
        &self.ues
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn last_clustering(&self) -> Option<&ClusteringResult> {
        self.last_clustering.as_ref()
    }

    /// Next TTI to execute.
    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn is_finished(&self) -> bool {
        self.tti >= self.cfg.tti_count
    }

    fn relocalize(&mut self, i: usize) -> Result<(), GeometryError> {
        let ue = &mut self.ues[i];
        let rmse = self.cfg.effective_error_rmse();
        ue.reported = match (self.cfg.scenario, self.cfg.error_model) {
            (Scenario::KmeansExact, _) => UncertainPoint::exact(ue.id, ue.true_position)?,
            (_, ErrorModel::UniformDisk) => inject_error(ue.id, ue.true_position, rmse, &mut self.localization)?,
            (_, ErrorModel::TwoMode { separation_deg, primary_weight }) => inject_two_mode_error(
                ue.id,
                ue.true_position,
                self.gnb,
                separation_deg.to_radians(),
                primary_weight,
                &mut self.localization,
            )?,
        };
        Ok(())
    }

    fn update_positions(&mut self, t: u64) -> Result<(), GeometryError> {
        let moved: Vec<usize> = match &self.trace {
            Some(trace) => {
                let rows = trace.rows_at(t);
                if t == 0 {
                    return Ok(());
                }
                for (id, p) in rows {
                    self.ues[*id].true_position = *p;
                }
                rows.iter().map(|(id, _)| *id).collect()
            }
            None => {
                if t == 0 || !t.is_multiple_of(self.cfg.move_interval_ttis) {
                    return Ok(());
                }
                move_ues(&mut self.ues, self.cfg.cell_radius_m, self.gnb, &mut self.mobility);
                (0..self.ues.len()).collect()
            }
        };
        for i in moved {
            self.relocalize(i)?;
        }
        Ok(())
    }

    /// Clusters the scenario's view of the UEs; returns the clustered
    /// positions used for beam formation.
    fn cluster(&mut self) -> Result<(ClusteringResult, Vec<Point2D>), SimError> {
        let k = self.cfg.n_clusters.min(self.ues.len());
        let ccfg = ClusteringConfig {
            k,
            max_iterations: self.cfg.clustering.max_iterations,
            convergence_epsilon: self.cfg.clustering.convergence_epsilon,
            init_strategy: self.cfg.clustering.init_strategy,
            seed: self.clustering_seed,
        };
        let warm = self.centers.as_deref().filter(|c| c.len() == k);
        let (result, positions) = match self.cfg.scenario {
            Scenario::UkmeansWithError => {
                let data: Vec<UncertainPoint> = self.ues.iter().map(|u| u.reported.clone()).collect();
                let r = run_clustering_observed(&data, &ccfg, warm, |_| {})?;
                (r, data.iter().map(UncertainPoint::expected_position).collect())
            }
            Scenario::KmeansWithError => {
                let data: Vec<Point2D> = self.ues.iter().map(|u| u.reported.point_estimate()).collect();
                (run_clustering_observed(&data, &ccfg, warm, |_| {})?, data)
            }
            Scenario::KmeansExact => {
                let data: Vec<Point2D> = self.ues.iter().map(|u| u.true_position).collect();
                (run_clustering_observed(&data, &ccfg, warm, |_| {})?, data)
            }
        };
        self.centers = Some(result.centers.clone());
        Ok((result, positions))
    }

    /// Executes one TTI and returns its metrics. Errors leave the state of
    /// the failed TTI unapplied only for configuration-level failures, which
    /// `new` already rules out.
    pub fn step(&mut self) -> Result<TtiRecord, SimError> {
        let t = self.tti;
        let cfg = &self.cfg;
        let tti_s = cfg.tti_duration_s;

        // 1. arrivals
        let mut arrivals = 0;
        if self.schedule {
            for ue in &mut self.ues {
                let n = generate_arrivals(&ue.traffic, tti_s, &mut self.traffic);
                ue.queue.push_arrivals(n, ue.traffic.packet_bits(), t);
                arrivals += n;
            }
        }

        // 2. movement and re-localization
        self.update_positions(t)?;

        // 3. clustering, 4. beams
        let (clusters, positions) = self.cluster()?;
        let ids: Vec<usize> = self.ues.iter().map(|u| u.id).collect();
        let groups = BeamCluster::from_labels(&ids, &positions, &clusters.labels, &clusters.centers);
        self.last_clustering = Some(clusters);
        let cfg = &self.cfg;
        self.beams = form_beams(&groups, self.gnb, cfg.beam_width_rad(), cfg.n_beams, cfg.rbg_count);

        let truth: Vec<Point2D> = self.ues.iter().map(|u| u.true_position).collect();
        let coverage = coverage_rate(&self.beams, &truth, self.gnb, cfg.cell_radius_m);

        let mut record = TtiRecord {
            tti: t,
            coverage_rate: coverage,
            arrivals,
            delivered_bits: 0,
            delivered_packets: 0,
            delay_sum_ttis: 0,
            queued_packets: 0,
            queued_age_sum_ttis: 0,
            allocated_bits: 0.0,
            beams: self.beams.len(),
            mean_reward: 0.0,
        };

        if self.schedule {
            self.schedule_and_serve(t, &mut record)?;
        }

        self.tti += 1;
        Ok(record)
    }

    fn schedule_and_serve(&mut self, t: u64, record: &mut TtiRecord) -> Result<(), SimError> {
        let cfg = &self.cfg;
        let tti_s = cfg.tti_duration_s;
        let qos_sinr = db_to_linear(cfg.qos_sinr_db);
        let qos_latency = cfg.qos_latency_ttis();

        // 5. per-beam, per-RBG decisions
        let mut allocated = vec![0.0f64; self.ues.len()];
        let mut reward_sum = 0.0;
        let mut decisions = 0usize;
        for (b, beam) in self.beams.iter().enumerate() {
            let agent = &mut self.agents[b];
            agent.reset_carry();
            let links: Vec<LinkQuality> = beam
                .members
                .iter()
                .map(|&id| {
                    let pos = self.ues[id].true_position;
                    let dist = pos.dist(self.gnb).max(MIN_LINK_DISTANCE_M);
                    let others = self.beams.iter().enumerate().filter(|(j, _)| *j != b).map(|(_, x)| x);
                    let sinr = compute_sinr(pos.angle_from(self.gnb), dist, beam, others, &cfg.antenna)
                        .expect("distance clamped positive");
                    LinkQuality::from_sinr(sinr, &cfg.link)
                })
                .collect();
            let valid = beam.members.len();
            let mut state_cqi = self.last_cqi[b];
            for _ in 0..beam.rbg_count {
                let state = encode_state(state_cqi);
                let d = agent.act(state, valid);
                let ue = &self.ues[beam.members[d.action]];
                let link = links[d.action];
                allocated[ue.id] += link.rate_bps * tti_s;
                let delay_ratio = qos_latency / ue.queue.head_of_line_delay(t) as f64;
                let r = reward(ue.class, db_to_linear(link.sinr_db) / qos_sinr, delay_ratio);
                reward_sum += r;
                decisions += 1;
                agent.remember(ExperienceTuple {
                    state,
                    action: d.action,
                    next_state: encode_state(link.cqi),
                    reward: r,
                    hidden_context: d.carry_before,
                    valid_actions: valid,
                    next_valid_actions: valid,
                });
                state_cqi = link.cqi;
            }
            self.last_cqi[b] = state_cqi;
        }

        // 6. service
        for (ue, bits) in self.ues.iter_mut().zip(&allocated) {
            record.allocated_bits += bits;
            for p in ue.queue.serve(bits.floor() as u64, t) {
                record.delivered_bits += p.size_bits;
                record.delivered_packets += 1;
                record.delay_sum_ttis += t - p.arrival_tti;
            }
            record.queued_packets += ue.queue.len() as u64;
            record.queued_age_sum_ttis += ue.queue.queued_age_sum(t);
        }
        record.mean_reward = if decisions > 0 { reward_sum / decisions as f64 } else { 0.0 };

        // 7. training and target sync
        let done = t + 1;
        for agent in &mut self.agents {
            let acfg = agent.config();
            let (train, copy) =
                (done.is_multiple_of(acfg.train_interval_ttis), done.is_multiple_of(acfg.target_copy_interval_ttis));
            if train {
                agent.train();
            }
            if copy {
                agent.sync_target();
            }
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<Vec<TtiRecord>, SimError> {
        let mut out = Vec::with_capacity((self.cfg.tti_count - self.tti.min(self.cfg.tti_count)) as usize);
        while !self.is_finished() {
            out.push(self.step()?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig { tti_count: 40, runs: 1, ..ScenarioConfig::with_scenario(scenario) }
    }

    #[test]
    fn error_radius_and_rmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let up = inject_error(0, Point2D::ORIGIN, 8.0, &mut rng).unwrap();
        match up.pdf {
            UncertaintyPdf::UniformDisk { radius, .. } => assert!((radius - 11.3137).abs() < 1e-4),
            _ => panic!("disk expected"),
        }
        let n = 100_000;
        let ms: f64 = (0..n)
            .map(|_| {
                inject_error(0, Point2D::new(5.0, 5.0), 8.0, &mut rng)
                    .unwrap()
                    .point_estimate()
                    .dist_sq(Point2D::new(5.0, 5.0))
            })
            .sum::<f64>()
            / n as f64;
        assert!((ms.sqrt() - 8.0).abs() < 0.1, "rmse {}", ms.sqrt());
    }

    #[test]
    fn zero_error_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Point2D::new(3.0, -2.0);
        let up = inject_error(0, p, 0.0, &mut rng).unwrap();
        assert_eq!(up.pdf, UncertaintyPdf::UniformDisk { center: p, radius: 0.0 });
    }

    #[test]
    fn two_mode_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = Point2D::from_polar(100.0, 0.3);
        let n = 20_000;
        let primary_true = (0..n)
            .filter(|_| {
                let up = inject_two_mode_error(0, p, Point2D::ORIGIN, 0.4, 0.6, &mut rng).unwrap();
                up.point_estimate() == p
            })
            .count();
        let f = primary_true as f64 / n as f64;
        assert!((f - 0.6).abs() < 0.02, "{f}");
    }

    #[test]
    fn uniform_placement_mean_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 =
            (0..n).map(|_| uniform_in_cell(160.0, Point2D::ORIGIN, &mut rng).norm()).sum::<f64>() / n as f64;
        assert!((mean - 160.0 * 2.0 / 3.0).abs() / (160.0 * 2.0 / 3.0) < 0.01);
    }

    #[test]
    fn movement_happens_on_interval() {
        let mut sim = Simulation::new(&small(Scenario::KmeansWithError), 9).unwrap();
        let mut history = Vec::new();
        for _ in 0..12 {
            sim.step().unwrap();
            history.push(sim.ues()[0].true_position);
        }
        assert_ne!(history[9], history[10]);
        assert_eq!(history[10], history[11]);
        assert_eq!(history[0], history[9]);
    }

    #[test]
    fn zero_traffic_still_rewards() {
        let mut cfg = small(Scenario::KmeansExact);
        cfg.traffic.load_bps = 0.0;
        let mut sim = Simulation::new(&cfg, 4).unwrap();
        for r in sim.run_to_end().unwrap() {
            assert_eq!(r.delivered_bits, 0);
            assert_eq!(r.arrivals, 0);
            assert!(r.mean_reward > 0.0 && r.mean_reward < 1.0);
        }
    }

    #[test]
    fn single_ue_gets_every_rbg() {
        let mut cfg = small(Scenario::KmeansExact);
        cfg.n_clusters = 1;
        cfg.urllc_per_cluster = 0;
        cfg.embb_per_cluster = 1;
        cfg.n_beams = 1;
        let mut sim = Simulation::new(&cfg, 5).unwrap();
        sim.step().unwrap();
        let agent = &sim.agents()[0];
        assert_eq!(agent.memory().len(), cfg.rbg_count);
        for i in 0..agent.memory().len() {
            assert_eq!(agent.memory().get(i).unwrap().action, 0);
        }
    }

    #[test]
    fn coverage_only_matches_full_run() {
        let cfg = small(Scenario::UkmeansWithError);
        let full = Simulation::new(&cfg, 11).unwrap().run_to_end().unwrap();
        let cov = Simulation::coverage_only(&cfg, 11).unwrap().run_to_end().unwrap();
        for (a, b) in full.iter().zip(&cov) {
            assert_eq!(a.coverage_rate, b.coverage_rate);
        }
    }

    #[test]
    fn delivered_never_exceeds_allocated() {
        let cfg = small(Scenario::KmeansWithError);
        for r in Simulation::new(&cfg, 12).unwrap().run_to_end().unwrap() {
            assert!(r.delivered_bits as f64 <= r.allocated_bits);
        }
    }

    #[test]
    fn exact_scenario_reports_truth() {
        let sim = Simulation::new(&small(Scenario::KmeansExact), 2).unwrap();
        for ue in sim.ues() {
            assert_eq!(ue.reported.point_estimate(), ue.true_position);
        }
    }
}
