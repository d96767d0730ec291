//! Poisson packet arrivals and per-UE FIFO queues.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    /// Offered load per UE.
    pub load_bps: f64,
    pub packet_size_bytes: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { load_bps: 4e6, packet_size_bytes: 32 }
    }
}

impl TrafficConfig {
    pub fn packet_bits(&self) -> u64 {
        u64::from(self.packet_size_bytes) * 8
    }

    /// Packet arrival rate in packets per second.
    pub fn packet_rate(&self) -> f64 {
        self.load_bps / self.packet_bits() as f64
    }
}

/// Number of packets arriving during one TTI.
pub fn generate_arrivals<R: Rng + ?Sized>(cfg: &TrafficConfig, tti_duration: f64, rng: &mut R) -> u64 {
    let mean = cfg.packet_rate() * tti_duration;
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("positive finite mean");
    poisson.sample(rng) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub size_bits: u64,
    pub arrival_tti: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PacketQueue {
    packets: VecDeque<Packet>,
    pub arrived_packets: u64,
    pub delivered_bits: u64,
    pub delivered_packets: u64,
    /// Sum of per-packet queuing delays of delivered packets, in TTIs.
    pub delivered_delay_sum: u64,
}

impl PacketQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_arrivals(&mut self, count: u64, size_bits: u64, now: u64) {
        for _ in 0..count {
            self.packets.push_back(Packet { size_bits, arrival_tti: now });
        }
        self.arrived_packets += count;
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn queued_bits(&self) -> u64 {
        self.packets.iter().map(|p| p.size_bits).sum()
    }

    /// Sum over queued packets of their current age in TTIs.
    pub fn queued_age_sum(&self, now: u64) -> u64 {
        self.packets.iter().map(|p| now.saturating_sub(p.arrival_tti)).sum()
    }

    /// Drains whole packets in FIFO order while they fit in `budget_bits`.
    /// Unused budget is lost.
    pub fn serve(&mut self, budget_bits: u64, now: u64) -> Vec<Packet> {
        let mut left = budget_bits;
        let mut out = Vec::new();
        while let Some(head) = self.packets.front() {
            if head.size_bits > left {
                break;
            }
            left -= head.size_bits;
            let p = self.packets.pop_front().expect("front exists");
            self.delivered_bits += p.size_bits;
            self.delivered_packets += 1;
            self.delivered_delay_sum += now.saturating_sub(p.arrival_tti);
            out.push(p);
        }
        out
    }

    /// Age of the oldest packet, floored at one TTI (also for an empty queue).
    pub fn head_of_line_delay(&self, now: u64) -> u64 {
        self.packets.front().map_or(1, |p| now.saturating_sub(p.arrival_tti).max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn arrival_rate() {
        let cfg = TrafficConfig { load_bps: 4e6, packet_size_bytes: 32 };
        assert_eq!(cfg.packet_rate(), 15625.0);
    }

    #[test]
    fn zero_load_never_arrives() {
        let cfg = TrafficConfig { load_bps: 0.0, packet_size_bytes: 32 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| generate_arrivals(&cfg, 1.25e-4, &mut rng) == 0));
    }

    #[test]
    fn empirical_mean_matches() {
        let cfg = TrafficConfig::default();
        let tti = 1.25e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let total: u64 = (0..n).map(|_| generate_arrivals(&cfg, tti, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        let want = 15625.0 * tti;
        assert!((mean - want).abs() / want < 0.01, "{mean} vs {want}");
    }

    #[test]
    fn serve_examples() {
        let mut q = PacketQueue::new();
        q.push_arrivals(2, 256, 0);
        assert_eq!(q.serve(512, 0).len(), 2);

        let mut q = PacketQueue::new();
        q.push_arrivals(1, 256, 0);
        assert!(q.serve(255, 0).is_empty());
        assert_eq!(q.len(), 1);

        let mut q = PacketQueue::new();
        q.push_arrivals(1, 256, 5);
        q.serve(256, 9);
        assert_eq!(q.delivered_delay_sum, 4);
        assert_eq!(q.delivered_packets, 1);
    }

    #[test]
    fn hol_delay_examples() {
        let mut q = PacketQueue::new();
        assert_eq!(q.head_of_line_delay(3), 1);
        q.push_arrivals(1, 256, 10);
        assert_eq!(q.head_of_line_delay(10), 1);
        assert_eq!(q.head_of_line_delay(17), 7);
    }

    #[test]
    fn conservation() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut q = PacketQueue::new();
        for t in 0..500 {
            let n = generate_arrivals(&cfg, 1.25e-4, &mut rng);
            q.push_arrivals(n, cfg.packet_bits(), t);
            q.serve((t % 3) * 300, t);
            assert_eq!(q.arrived_packets, q.delivered_packets + q.len() as u64);
            assert!(q.head_of_line_delay(t) >= 1);
        }
    }
}
