//! Fixed-capacity experience memory with uniform sampling.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use super::lstm::Carry;

/// One scheduling decision and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceTuple {
    pub state: f64,
    pub action: usize,
    pub next_state: f64,
    pub reward: f64,
    /// LSTM carry before `state` was fed in.
    pub hidden_context: Carry,
    /// Actions that were selectable at this decision.
    pub valid_actions: usize,
    /// Actions selectable at the following decision; zero marks a terminal
    /// transition with no bootstrap term.
    pub next_valid_actions: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("replay memory holds {stored} experiences, {wanted} requested")]
pub struct NotReady {
    pub stored: usize,
    pub wanted: usize,
}

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buf: VecDeque<ExperienceTuple>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay capacity must be positive");
        Self { buf: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends, evicting the oldest entry once full.
    pub fn push(&mut self, e: ExperienceTuple) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(e);
    }

    pub fn get(&self, i: usize) -> Option<&ExperienceTuple> {
        self.buf.get(i)
    }

    /// Indices of `n` distinct stored entries, uniformly at random.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>, NotReady> {
        if self.buf.len() < n {
            return Err(NotReady { stored: self.buf.len(), wanted: n });
        }
        Ok(sample(rng, self.buf.len(), n).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&ExperienceTuple>, NotReady> {
        Ok(self.sample_indices(n, rng)?.into_iter().map(|i| &self.buf[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp(tag: f64) -> ExperienceTuple {
        ExperienceTuple {
            state: tag,
            action: 0,
            next_state: 0.0,
            reward: 0.5,
            hidden_context: Carry::zeros(1),
            valid_actions: 1,
            next_valid_actions: 1,
        }
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut m = ReplayMemory::new(60);
        for i in 0..61 {
            m.push(exp(i as f64));
        }
        assert_eq!(m.len(), 60);
        assert_eq!(m.get(0).unwrap().state, 1.0);
        assert_eq!(m.get(59).unwrap().state, 60.0);
    }

    #[test]
    fn sample_without_replacement() {
        let mut m = ReplayMemory::new(60);
        (0..60).for_each(|i| m.push(exp(i as f64)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut idx = m.sample_indices(20, &mut rng).unwrap();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 20);
    }

    #[test]
    fn underfilled_is_not_ready() {
        let mut m = ReplayMemory::new(60);
        (0..5).for_each(|i| m.push(exp(i as f64)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(m.sample(20, &mut rng).unwrap_err(), NotReady { stored: 5, wanted: 20 });
    }

    #[test]
    fn sampling_is_uniform() {
        let mut m = ReplayMemory::new(60);
        (0..60).for_each(|i| m.push(exp(i as f64)));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 100_000;
        let mut hits = vec![0u32; 60];
        for _ in 0..trials {
            for i in m.sample_indices(20, &mut rng).unwrap() {
                hits[i] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / trials as f64;
            assert!((f - 1.0 / 3.0).abs() / (1.0 / 3.0) < 0.02, "freq {f}");
        }
    }
}
