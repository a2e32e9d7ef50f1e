//! Sinkless sandpile dynamics.
//!
//! Grains are dropped one at a time on uniformly chosen nodes. Whenever a
//! node holds strictly more sand than its capacity it topples: `g` is blown
//! away, then one grain goes to each neighbor. All nodes over capacity
//! topple together in one synchronous step, and no grain is dropped until
//! the cascade has settled. The last grain's cascade always runs to
//! completion.
//!
//! With `g = 0` and at least one infinite-capacity sink, the same engine runs
//! the classic sandpile ([`Mode::AsmOracle`]); [`simulate_asm_oracle`] is an
//! independent whole-grain implementation of that case.

mod asm;
mod sandpile;
mod schedule;
mod units;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use asm::simulate_asm_oracle;
pub use sandpile::{topple_set, CascadeOutcome, Sandpile, SandpileState};
pub use schedule::{derive_seed, mix64, uniform_index, DropSchedule};
pub use units::{ExactUnits, FloatUnits, SandUnits};

use crate::capacity::{validate_asm_capacities, validate_capacities, CapacityVector};
use crate::graph::{Graph, NodeId};
use crate::numeric::Dissipation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("node {node}: capacity {capacity} below required {required}")]
    InfeasibleCapacity { node: NodeId, capacity: f64, required: f64 },
    #[error("sinkless mode does not allow sinks")]
    SinksInSinklessMode,
    #[error("sinkless mode needs g > 0")]
    ZeroDissipation,
    #[error("classic mode needs g = 0, got {0}")]
    AsmDissipation(String),
    #[error("classic mode needs at least one sink")]
    NoSink,
    #[error("nodes {0:?} cannot reach a sink")]
    SinkUnreachable(Vec<NodeId>),
    #[error("at least one grain must be dropped")]
    NoGrains,
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("drop on node {node} out of range for {n} nodes")]
    DropOutOfRange { node: NodeId, n: usize },
    #[error("drop on sink {0}")]
    DropOnSink(NodeId),
    #[error("drop schedule has {found} entries for {expected} grains")]
    DropCount { expected: u64, found: usize },
    #[error("exact arithmetic needs exact capacities")]
    InexactCapacities,
    #[error("threshold for node {0} overflows 64-bit units")]
    ThresholdOverflow(NodeId),
    #[error("node {node} went negative at t={clock}; capacities are infeasible")]
    NegativeSand { node: NodeId, clock: u64 },
    #[error("cascade exceeded {budget} steps ({steps} taken); arithmetic is inconsistent")]
    Watchdog { steps: u64, budget: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Sinkless,
    AsmOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    /// Integer units of `1/q`; bit-for-bit reproducible.
    #[default]
    Exact,
    /// Double precision, same operation order as the reference listing.
    Float,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigWarning {
    /// Fewer than `2K` grains may not reach the critical regime.
    FewGrains { grains: u64, total_capacity: f64 },
}

#[derive(Debug, Clone)]
pub struct SimulationConfig<'a> {
    pub graph: &'a Graph,
    pub capacities: &'a CapacityVector,
    pub dissipation: Dissipation,
    pub grains: u64,
    pub seed: u64,
    pub mode: Mode,
    pub arithmetic: Arithmetic,
    /// Replaces the random schedule when set.
    pub drops: Option<&'a [NodeId]>,
}

impl<'a> SimulationConfig<'a> {
    pub fn new(
        graph: &'a Graph,
        capacities: &'a CapacityVector,
        dissipation: Dissipation,
        grains: u64,
        seed: u64,
    ) -> Self {
        SimulationConfig {
            graph,
            capacities,
            dissipation,
            grains,
            seed,
            mode: Mode::Sinkless,
            arithmetic: Arithmetic::Exact,
            drops: None,
        }
    }

    /// Validates the configuration; non-fatal issues come back as warnings.
    pub fn check(&self) -> Result<Vec<ConfigWarning>, EngineError> {
        let n = self.graph.node_count();
        if self.grains == 0 {
            return Err(EngineError::NoGrains);
        }
        if self.capacities.len() != n {
            return Err(EngineError::LengthMismatch {
                expected: n,
                found: self.capacities.len(),
            });
        }
        if self.arithmetic == Arithmetic::Exact && !self.capacities.is_exact() {
            return Err(EngineError::InexactCapacities);
        }
        let sinks = self.capacities.sinks();
        let report = match self.mode {
            Mode::Sinkless => {
                if !sinks.is_empty() {
                    return Err(EngineError::SinksInSinklessMode);
                }
                if self.dissipation.is_zero() {
                    return Err(EngineError::ZeroDissipation);
                }
                validate_capacities(self.graph, self.capacities, self.dissipation)
            }
            Mode::AsmOracle => {
                if !self.dissipation.is_zero() {
                    return Err(EngineError::AsmDissipation(self.dissipation.to_string()));
                }
                if sinks.is_empty() {
                    return Err(EngineError::NoSink);
                }
                let stranded = self.graph.unreachable_from(sinks);
                if !stranded.is_empty() {
                    return Err(EngineError::SinkUnreachable(stranded));
                }
                validate_asm_capacities(self.graph, self.capacities)
            }
        };
        if let Some(bad) = report.violations().next() {
            return Err(EngineError::InfeasibleCapacity {
                node: bad.node,
                capacity: bad.capacity,
                required: bad.required,
            });
        }
        if let Some(drops) = self.drops {
            if drops.len() as u64 != self.grains {
                return Err(EngineError::DropCount {
                    expected: self.grains,
                    found: drops.len(),
                });
            }
            for &node in drops {
                if node >= n {
                    return Err(EngineError::DropOutOfRange { node, n });
                }
                if self.capacities.is_sink(node) {
                    return Err(EngineError::DropOnSink(node));
                }
            }
        }
        let total_capacity: f64 = (0..n)
            .filter(|&i| !self.capacities.is_sink(i))
            .map(|i| self.capacities.get_f64(i))
            .sum();
        let mut warnings = Vec::new();
        if (self.grains as f64) < 2.0 * total_capacity {
            warnings.push(ConfigWarning::FewGrains {
                grains: self.grains,
                total_capacity,
            });
        }
        Ok(warnings)
    }

    /// Non-sink nodes, the support of the random drop schedule.
    pub fn drop_candidates(&self) -> Vec<NodeId> {
        (0..self.graph.node_count())
            .filter(|&i| !self.capacities.is_sink(i))
            .collect()
    }

    fn schedule(&self) -> DropSchedule {
        match self.drops {
            Some(drops) => DropSchedule::forced(drops.to_vec()),
            None => DropSchedule::random(self.seed, self.drop_candidates()),
        }
    }
}

/// Final sand per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SandLevels {
    /// `units[i] / denom` grains at node `i`.
    Exact {
        units: Vec<i64>,
        denom: i64,
    },
    Float(Vec<f64>),
}

impl SandLevels {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            SandLevels::Exact { units, denom } => units.iter().map(|&u| u as f64 / *denom as f64).collect(),
            SandLevels::Float(v) => v.clone(),
        }
    }

    /// Decimal rendering: exact values as reduced `p/q` (or integers), floats
    /// in shortest round-trip form.
    pub fn render(&self) -> Vec<String> {
        match self {
            SandLevels::Exact { units, denom } => units
                .iter()
                .map(|&u| {
                    let r = num::rational::Ratio::new(u, *denom);
                    if r.is_integer() {
                        r.numer().to_string()
                    } else {
                        format!("{}/{}", r.numer(), r.denom())
                    }
                })
                .collect(),
            SandLevels::Float(v) => v.iter().map(|x| x.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub final_sand: SandLevels,
    pub topples: Vec<u64>,
    /// Cumulative network-total topples after each grain; length = grains.
    pub ntnt: Vec<u64>,
}

impl SimulationResult {
    pub fn total_topples(&self) -> u64 {
        self.topples.iter().sum()
    }
}

fn run_with<U: SandUnits>(config: &SimulationConfig<'_>, units: U) -> Result<SandpileState<U::Amount>, EngineError> {
    let mut pile = Sandpile::new(config.graph, config.capacities, units)?;
    for node in config.schedule().take(config.grains as usize) {
        pile.drop_grain(node)?;
    }
    Ok(pile.into_state())
}

/// Runs a full simulation: `grains` drops, each followed by its complete
/// cascade. Deterministic in `(config, seed)`.
pub fn simulate(config: &SimulationConfig<'_>) -> Result<SimulationResult, EngineError> {
    config.check()?;
    Ok(match config.arithmetic {
        Arithmetic::Exact => {
            let units = ExactUnits::new(config.dissipation);
            let state = run_with(config, units)?;
            SimulationResult {
                final_sand: SandLevels::Exact {
                    units: state.sand,
                    denom: units.grain,
                },
                topples: state.topples,
                ntnt: state.ntnt,
            }
        }
        Arithmetic::Float => {
            let state = run_with(config, FloatUnits::new(config.dissipation))?;
            SimulationResult {
                final_sand: SandLevels::Float(state.sand),
                topples: state.topples,
                ntnt: state.ntnt,
            }
        }
    })
}
