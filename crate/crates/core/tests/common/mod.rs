#![allow(dead_code)]

use std::io::Write;
use std::panic::{self, UnwindSafe};

use num::{BigInt, BigRational, One};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use sinkless::capacity::minimum_feasible_k;
use sinkless::graph::{Graph, NodeId};
use sinkless::numeric::Dissipation;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Random spanning tree plus each remaining pair with probability `p`,
/// node ids shuffled.
pub fn random_connected(rng: &mut SplitMix64, n: usize, p: f64) -> Graph {
    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((perm[i], perm[j]));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Erdos-Renyi graph; may be disconnected or have isolated nodes.
pub fn random_graph(rng: &mut SplitMix64, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub const DISSIPATIONS: [(i64, i64); 6] = [(1, 10), (1, 4), (1, 2), (1, 1), (3, 7), (2, 3)];

pub fn random_dissipation(rng: &mut SplitMix64) -> Dissipation {
    let (p, q) = DISSIPATIONS[rng.gen_range(0..DISSIPATIONS.len())];
    Dissipation::new(p, q).unwrap()
}

/// The smallest feasible `K` scaled by a random factor in `[1, 1.5]`.
pub fn feasible_total(rng: &mut SplitMix64, g: &Graph, exponent: i32, dissipation: Dissipation) -> BigRational {
    let slack = ratio(rng.gen_range(0..=5), 10) + BigRational::one();
    minimum_feasible_k(g, exponent, dissipation).unwrap() * slack
}

pub fn random_drops(rng: &mut SplitMix64, candidates: &[NodeId], count: usize) -> Vec<NodeId> {
    (0..count)
        .map(|_| candidates[rng.gen_range(0..candidates.len())])
        .collect()
}

/// Runs one acceptance criterion and reports it on stderr, bypassing the
/// test harness's output capture so the line shows in every run.
pub fn criterion<F: FnOnce() -> String + UnwindSafe>(number: u32, name: &str, body: F) {
    let outcome = panic::catch_unwind(body);
    let line = match &outcome {
        Ok(detail) => format!("PASS criterion {number:>2} {name}: {detail}\n"),
        Err(_) => format!("FAIL criterion {number:>2} {name}\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(payload) = outcome {
        panic::resume_unwind(payload);
    }
}
