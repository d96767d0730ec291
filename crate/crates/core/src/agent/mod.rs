//! Per-beam deep Q-learning scheduler.
//!
//! Each beam owns one [`Agent`]. At every RBG the agent reads the last CQI
//! report as its state, picks a UE epsilon-greedily from LSTM Q-values, and
//! later learns from replayed `(state, action, next_state, reward)` tuples
//! against a periodically synchronized target network.

pub mod checkpoint;
pub mod lstm;
pub mod replay;

pub use lstm::{Carry, Lstm};
pub use replay::{ExperienceTuple, NotReady, ReplayMemory};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::CQI_LEVELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Urllc,
    Embb,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid agent configuration: {0}")]
pub struct AgentConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub hidden_units: usize,
    pub input_size: usize,
    pub action_count: usize,
    pub minibatch: usize,
    pub replay_capacity: usize,
    pub train_interval_ttis: u64,
    pub target_copy_interval_ttis: u64,
    /// Initial parameters are uniform in [-init_scale, init_scale].
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            epsilon: 0.1,
            learning_rate: 0.01,
            hidden_units: 20,
            input_size: 1,
            action_count: 2,
            minibatch: 20,
            replay_capacity: 60,
            train_interval_ttis: 60,
            target_copy_interval_ttis: 120,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentConfigError> {
        let bad = |m: &str| Err(AgentConfigError(m.to_owned()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.hidden_units == 0
            || self.input_size == 0
            || self.action_count == 0
            || self.minibatch == 0
            || self.replay_capacity == 0
            || self.train_interval_ttis == 0
            || self.target_copy_interval_ttis == 0
        {
            return bad("all counts must be at least 1");
        }
        if self.minibatch > self.replay_capacity {
            return bad("minibatch exceeds replay capacity");
        }
        if self.input_size != 1 {
            return bad("the CQI state is a scalar; input_size must be 1");
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad("init scale must be non-negative");
        }
        Ok(())
    }
}

/// CQI index normalized to [0, 1].
pub fn encode_state(cqi: u8) -> f64 {
    debug_assert!((cqi as usize) < CQI_LEVELS);
    f64::from(cqi) / (CQI_LEVELS - 1) as f64
}

pub fn sigmoid(x: f64) -> f64 {
    lstm::sigmoid(x)
}

/// QoS reward for one RBG allocation. `sinr_ratio` is `S / S_qos` (linear),
/// `delay_ratio` is `T_qos / T_queue` with the queue delay floored at 1 TTI.
pub fn reward(class: TrafficClass, sinr_ratio: f64, delay_ratio: f64) -> f64 {
    match class {
        TrafficClass::Embb => sigmoid(sinr_ratio),
        TrafficClass::Urllc => sigmoid(sinr_ratio * delay_ratio),
    }
}

/// Epsilon-greedy over the first `valid` actions; greedy ties go to the
/// lowest index.
pub fn select_action<R: Rng + ?Sized>(q: &[f64], valid: usize, epsilon: f64, rng: &mut R) -> usize {
    let valid = valid.clamp(1, q.len());
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..valid);
    }
    argmax(&q[..valid])
}

fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in q.iter().enumerate().skip(1) {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

/// Mean squared TD error of a minibatch and its gradient w.r.t. the main
/// network. Targets bootstrap from the target network, which first consumes
/// the stored state from the stored carry and then evaluates the next state.
pub fn loss_and_gradient(main: &Lstm, target: &Lstm, batch: &[&ExperienceTuple], gamma: f64) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; main.params().len()];
    let mut loss = 0.0;
    for e in batch {
        let y = e.reward + gamma * bootstrap_value(target, e);
        let (q, _, cache) = main.step(&e.hidden_context, &[e.state]);
        let td = y - q[e.action];
        loss += td * td / n;
        let mut dq = vec![0.0; q.len()];
        dq[e.action] = -2.0 * td / n;
        let g = main.backward(std::slice::from_ref(&cache), &[dq]);
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    (loss, grad)
}

fn bootstrap_value(target: &Lstm, e: &ExperienceTuple) -> f64 {
    if e.next_valid_actions == 0 {
        return 0.0;
    }
    let (_, carry, _) = target.step(&e.hidden_context, &[e.state]);
    let (q_next, _, _) = target.step(&carry, &[e.next_state]);
    let valid = e.next_valid_actions.clamp(1, q_next.len());
    q_next[..valid].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// One gradient-descent step on the main network; returns the pre-update loss.
pub fn train_step(main: &mut Lstm, target: &Lstm, batch: &[&ExperienceTuple], gamma: f64, step: f64) -> f64 {
    let (loss, grad) = loss_and_gradient(main, target, batch, gamma);
    main.apply_gradient(&grad, step);
    loss
}

/// Result of one `act` call.
#[derive(Debug, Clone)]
pub struct Decision {
    pub action: usize,
    pub q: Vec<f64>,
    /// Carry before this decision's state was consumed.
    pub carry_before: Carry,
}

#[derive(Debug, Clone)]
pub struct Agent {
    cfg: AgentConfig,
    main: Lstm,
    target: Lstm,
    memory: ReplayMemory,
    rng: ChaCha8Rng,
    carry: Carry,
    train_steps: u64,
}

impl Agent {
    pub fn new(cfg: AgentConfig) -> Result<Self, AgentConfigError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let main = Lstm::random(cfg.input_size, cfg.hidden_units, cfg.action_count, cfg.init_scale, &mut rng);
        let target = main.clone();
        Ok(Self {
            memory: ReplayMemory::new(cfg.replay_capacity),
            carry: Carry::zeros(cfg.hidden_units),
            cfg,
            main,
            target,
            rng,
            train_steps: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn main(&self) -> &Lstm {
        &self.main
    }

    pub fn target(&self) -> &Lstm {
        &self.target
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn replace_main(&mut self, net: Lstm) {
        assert_eq!(net.params().len(), self.main.params().len(), "shape mismatch");
        self.main = net;
    }

    pub fn reset_carry(&mut self) {
        self.carry = Carry::zeros(self.cfg.hidden_units);
    }

    /// Feeds `state` to the main network and picks among the first `valid` actions.
    pub fn act(&mut self, state: f64, valid: usize) -> Decision {
        let carry_before = self.carry.clone();
        let (q, carry, _) = self.main.step(&carry_before, &[state]);
        self.carry = carry;
        let action = select_action(&q, valid, self.cfg.epsilon, &mut self.rng);
        Decision { action, q, carry_before }
    }

    /// Greedy Q-values from a fresh carry, without touching agent state.
    pub fn q_values(&self, state: f64) -> Vec<f64> {
        self.main.step(&Carry::zeros(self.cfg.hidden_units), &[state]).0
    }

    pub fn remember(&mut self, e: ExperienceTuple) {
        self.memory.push(e);
    }

    /// Samples a minibatch and takes one descent step, or `None` while the
    /// memory holds fewer than `minibatch` tuples.
    pub fn train(&mut self) -> Option<f64> {
        let idx = self.memory.sample_indices(self.cfg.minibatch, &mut self.rng).ok()?;
        let batch: Vec<&ExperienceTuple> = idx.iter().map(|&i| self.memory.get(i).expect("sampled index")).collect();
        let loss = train_step(&mut self.main, &self.target, &batch, self.cfg.gamma, self.cfg.learning_rate);
        self.train_steps += 1;
        Some(loss)
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.main);
    }
}
