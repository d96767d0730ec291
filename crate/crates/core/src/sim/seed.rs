//! Seed derivation.
//!
//! `splitmix64` is the finalizer of Steele et al.'s SplitMix generator. A
//! child seed is `splitmix64(parent + (stream + 1) * 0x9E3779B97F4A7C15)`
//! with wrapping arithmetic: run `i` of a scenario uses
//! `split_seed(master_seed, i)`, and each random consumer inside a run uses
//! `split_seed(run_seed, stream_id)`. Streams are separate so that, for
//! example, scheduling never perturbs the mobility sequence.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_seed(parent: u64, stream: u64) -> u64 {
    splitmix64(parent.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Random streams used inside a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Mobility,
    Localization,
    Traffic,
    Clustering,
    Agent(usize),
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::Mobility => 1,
            Stream::Localization => 2,
            Stream::Traffic => 3,
            Stream::Clustering => 4,
            Stream::Agent(b) => 1000 + b as u64,
        }
    }

    pub fn seed(self, run_seed: u64) -> u64 {
        split_seed(run_seed, self.id())
    }
}
