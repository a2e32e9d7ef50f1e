//! Reproducible grain-drop schedules.
//!
//! Random drops use SplitMix64 (Steele, Lea & Flood 2014): the state advances
//! by `0x9E3779B97F4A7C15` and each output is the state passed through the
//! `mix64` finalizer below. The state starts at the seed itself. A node index
//! in `[0, n)` is taken from one 64-bit output `x` by rejection: outputs at or
//! above `2^64 - (2^64 mod n)` are discarded, otherwise the index is `x mod n`.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::graph::NodeId;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for run `run` of sweep configuration `config`:
/// `mix64(mix64(base + γ(config + 1)) + γ(run + 1))`, wrapping, `γ` the
/// golden gamma.
pub fn derive_seed(base: u64, config: u64, run: u64) -> u64 {
    let per_config = mix64(base.wrapping_add(GOLDEN_GAMMA.wrapping_mul(config.wrapping_add(1))));
    mix64(per_config.wrapping_add(GOLDEN_GAMMA.wrapping_mul(run.wrapping_add(1))))
}

/// Uniform index in `[0, n)` without modulo bias. `n` must be positive.
pub fn uniform_index<R: RngCore>(rng: &mut R, n: usize) -> usize {
    let n = n as u64;
    assert!(n > 0, "cannot sample from an empty range");
    let reject_from = 0u64.wrapping_sub((u64::MAX % n + 1) % n);
    loop {
        let x = rng.next_u64();
        if reject_from == 0 || x < reject_from {
            return (x % n) as usize;
        }
    }
}

#[derive(Debug, Clone)]
pub enum DropSchedule {
    Random { rng: SplitMix64, candidates: Vec<NodeId> },
    Forced { drops: Vec<NodeId>, next: usize },
}

impl DropSchedule {
    /// Uniform over `candidates`, in order.
    pub fn random(seed: u64, candidates: Vec<NodeId>) -> Self {
        DropSchedule::Random {
            rng: SplitMix64::seed_from_u64(seed),
            candidates,
        }
    }

    pub fn forced(drops: Vec<NodeId>) -> Self {
        DropSchedule::Forced { drops, next: 0 }
    }
}

impl Iterator for DropSchedule {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        match self {
            DropSchedule::Random { rng, candidates } => {
                (!candidates.is_empty()).then(|| candidates[uniform_index(rng, candidates.len())])
            }
            DropSchedule::Forced { drops, next } => {
                let node = drops.get(*next).copied();
                *next += 1;
                node
            }
        }
    }
}
