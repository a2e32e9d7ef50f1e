//! Sand arithmetic.
//!
//! [`ExactUnits`] stores sand as integer multiples of `1/q` where `g = p/q`.
//! Every quantity the dynamics touch (whole grains, `DEG(i)`, `g`) is such a
//! multiple, so the exact engine never rounds. A node holding `m/q` topples
//! iff `m/q > k`, i.e. iff `m > floor(q * k)`, which turns each capacity into
//! an integer threshold.
//!
//! [`FloatUnits`] mirrors the reference listing operation for operation in
//! double precision.

use std::fmt::Debug;

use num::{BigRational, ToPrimitive};

use super::EngineError;
use crate::capacity::CapacityVector;
use crate::graph::NodeId;
use crate::numeric::Dissipation;

pub trait SandUnits: Clone + Send + Sync {
    type Amount: Copy + PartialOrd + PartialEq + Debug + Send + Sync;

    fn zero(&self) -> Self::Amount;
    fn add_grains(&self, s: Self::Amount, count: usize) -> Self::Amount;
    /// Removes `g`.
    fn blow_away(&self, s: Self::Amount) -> Self::Amount;
    /// Removes one grain per neighbor.
    fn shed(&self, s: Self::Amount, degree: usize) -> Self::Amount;
    fn is_negative(&self, s: Self::Amount) -> bool;
    fn to_f64(&self, s: Self::Amount) -> f64;
    /// Topple threshold for `node`; `None` means the node never topples.
    fn threshold(&self, k: &CapacityVector, node: NodeId) -> Result<Option<Self::Amount>, EngineError>;
    /// Upper bound on synchronous steps for a cascade starting from `sand`.
    fn step_budget(&self, sand: &[Self::Amount], sinks: &[NodeId]) -> u64;
}

fn asm_budget(mass: f64, n: usize) -> u64 {
    // no dissipation: generous polynomial cap, only catches runaway loops
    let n = n as f64;
    ((mass + 1.0) * n * n * n + 16.0).min(u64::MAX as f64 / 2.0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactUnits {
    /// Units per grain (`q`).
    pub grain: i64,
    /// Units blown away per topple (`p`).
    pub blow: i64,
}

impl ExactUnits {
    pub fn new(g: Dissipation) -> Self {
        ExactUnits {
            grain: g.denom(),
            blow: g.numer(),
        }
    }

    /// Converts a rational amount of sand to units, if representable.
    pub fn amount(&self, r: &BigRational) -> Option<i64> {
        let scaled = r * BigRational::from_integer(self.grain.into());
        scaled.is_integer().then(|| scaled.to_integer().to_i64()).flatten()
    }

    pub fn to_rational(&self, units: i64) -> BigRational {
        BigRational::new(units.into(), self.grain.into())
    }
}

impl SandUnits for ExactUnits {
    type Amount = i64;

    fn zero(&self) -> i64 {
        0
    }

    fn add_grains(&self, s: i64, count: usize) -> i64 {
        s + self.grain * count as i64
    }

    fn blow_away(&self, s: i64) -> i64 {
        s - self.blow
    }

    fn shed(&self, s: i64, degree: usize) -> i64 {
        s - self.grain * degree as i64
    }

    fn is_negative(&self, s: i64) -> bool {
        s < 0
    }

    fn to_f64(&self, s: i64) -> f64 {
        s as f64 / self.grain as f64
    }

    fn threshold(&self, k: &CapacityVector, node: NodeId) -> Result<Option<i64>, EngineError> {
        if k.is_sink(node) {
            return Ok(None);
        }
        let exact = k.get_exact(node).ok_or(EngineError::InexactCapacities)?;
        let scaled = (exact * BigRational::from_integer(self.grain.into())).floor();
        scaled
            .to_integer()
            .to_i64()
            .map(Some)
            .ok_or(EngineError::ThresholdOverflow(node))
    }

    fn step_budget(&self, sand: &[i64], sinks: &[NodeId]) -> u64 {
        let mass: i64 = sand
            .iter()
            .enumerate()
            .filter(|(i, _)| !sinks.contains(i))
            .map(|(_, &s)| s)
            .sum();
        if self.blow > 0 {
            (mass.max(0) / self.blow) as u64 + 1
        } else {
            asm_budget(mass as f64 / self.grain as f64, sand.len())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatUnits {
    pub g: f64,
}

impl FloatUnits {
    pub fn new(g: Dissipation) -> Self {
        FloatUnits { g: g.as_f64() }
    }
}

impl SandUnits for FloatUnits {
    type Amount = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn add_grains(&self, mut s: f64, count: usize) -> f64 {
        for _ in 0..count {
            s += 1.0;
        }
        s
    }

    fn blow_away(&self, s: f64) -> f64 {
        s - self.g
    }

    fn shed(&self, s: f64, degree: usize) -> f64 {
        s - degree as f64
    }

    fn is_negative(&self, s: f64) -> bool {
        s < 0.0
    }

    fn to_f64(&self, s: f64) -> f64 {
        s
    }

    fn threshold(&self, k: &CapacityVector, node: NodeId) -> Result<Option<f64>, EngineError> {
        Ok((!k.is_sink(node)).then(|| k.get_f64(node)))
    }

    fn step_budget(&self, sand: &[f64], sinks: &[NodeId]) -> u64 {
        let mass: f64 = sand
            .iter()
            .enumerate()
            .filter(|(i, _)| !sinks.contains(i))
            .map(|(_, &s)| s)
            .sum();
        if self.g > 0.0 {
            (mass.max(0.0) / self.g).ceil() as u64 + 1
        } else {
            asm_budget(mass, sand.len())
        }
    }
}
