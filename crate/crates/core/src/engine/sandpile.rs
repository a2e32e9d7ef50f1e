use serde::Serialize;

use super::units::SandUnits;
use super::EngineError;
use crate::capacity::CapacityVector;
use crate::graph::{Graph, NodeId};

/// Nodes whose sand strictly exceeds their threshold. `None` thresholds
/// (sinks) never topple.
pub fn topple_set<A: PartialOrd>(sand: &[A], thresholds: &[Option<A>]) -> Vec<NodeId> {
    sand.iter()
        .zip(thresholds)
        .enumerate()
        .filter(|(_, (s, k))| k.as_ref().is_some_and(|k| *s > k))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandpileState<A> {
    pub sand: Vec<A>,
    pub topples: Vec<u64>,
    pub drops: u64,
    /// Entry `x` is the cumulative topple count once grain `x + 1` settled.
    pub ntnt: Vec<u64>,
    pub clock: u64,
}

impl<A> SandpileState<A> {
    pub fn total_topples(&self) -> u64 {
        self.topples.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CascadeOutcome {
    pub topples: u64,
    pub steps: u64,
}

/// A graph, its thresholds, and the evolving sand configuration.
#[derive(Debug, Clone)]
pub struct Sandpile<'g, U: SandUnits> {
    graph: &'g Graph,
    units: U,
    thresholds: Vec<Option<U::Amount>>,
    sinks: Vec<NodeId>,
    state: SandpileState<U::Amount>,
    toppling_neighbors: Vec<usize>,
}

impl<'g, U: SandUnits> Sandpile<'g, U> {
    /// Empty sandpile. Capacity feasibility is the caller's concern; see
    /// [`crate::engine::SimulationConfig::check`].
    pub fn new(graph: &'g Graph, capacities: &CapacityVector, units: U) -> Result<Self, EngineError> {
        let n = graph.node_count();
        if capacities.len() != n {
            return Err(EngineError::LengthMismatch {
                expected: n,
                found: capacities.len(),
            });
        }
        let thresholds = (0..n)
            .map(|i| units.threshold(capacities, i))
            .collect::<Result<Vec<_>, _>>()?;
        let zero = units.zero();
        Ok(Sandpile {
            graph,
            units,
            thresholds,
            sinks: capacities.sinks().to_vec(),
            state: SandpileState {
                sand: vec![zero; n],
                topples: vec![0; n],
                drops: 0,
                ntnt: Vec::new(),
                clock: 0,
            },
            toppling_neighbors: vec![0; n],
        })
    }

    pub fn units(&self) -> &U {
        &self.units
    }

    pub fn state(&self) -> &SandpileState<U::Amount> {
        &self.state
    }

    pub fn into_state(self) -> SandpileState<U::Amount> {
        self.state
    }

    pub fn thresholds(&self) -> &[Option<U::Amount>] {
        &self.thresholds
    }

    /// Overwrites the sand configuration, e.g. to start from a given state.
    pub fn set_sand(&mut self, sand: Vec<U::Amount>) -> Result<(), EngineError> {
        if sand.len() != self.graph.node_count() {
            return Err(EngineError::LengthMismatch {
                expected: self.graph.node_count(),
                found: sand.len(),
            });
        }
        self.state.sand = sand;
        Ok(())
    }

    pub fn topple_set(&self) -> Vec<NodeId> {
        topple_set(&self.state.sand, &self.thresholds)
    }

    /// One synchronous update: every node over threshold loses `g` and then
    /// one grain per neighbor, and every node gains one grain per toppling
    /// neighbor. Returns the number of topplers.
    pub fn step(&mut self) -> Result<usize, EngineError> {
        let topplers = self.topple_set();
        if topplers.is_empty() {
            return Ok(0);
        }
        self.state.clock += 1;
        self.toppling_neighbors.iter_mut().for_each(|c| *c = 0);
        for &j in &topplers {
            self.state.topples[j] += 1;
            let s = self.units.blow_away(self.state.sand[j]);
            self.state.sand[j] = self.units.shed(s, self.graph.degree(j));
            for &m in self.graph.neighbors(j) {
                self.toppling_neighbors[m] += 1;
            }
        }
        for (i, &count) in self.toppling_neighbors.iter().enumerate() {
            if count > 0 {
                self.state.sand[i] = self.units.add_grains(self.state.sand[i], count);
            }
        }
        if let Some(&node) = topplers.iter().find(|&&j| self.units.is_negative(self.state.sand[j])) {
            return Err(EngineError::NegativeSand {
                node,
                clock: self.state.clock,
            });
        }
        Ok(topplers.len())
    }

    /// Steps until nothing is over threshold.
    pub fn run_cascade(&mut self) -> Result<CascadeOutcome, EngineError> {
        let budget = self.units.step_budget(&self.state.sand, &self.sinks);
        let mut outcome = CascadeOutcome::default();
        loop {
            let toppled = self.step()?;
            if toppled == 0 {
                return Ok(outcome);
            }
            outcome.topples += toppled as u64;
            outcome.steps += 1;
            if outcome.steps > budget {
                return Err(EngineError::Watchdog {
                    steps: outcome.steps,
                    budget,
                });
            }
        }
    }

    /// Drops one grain on `node`, settles the cascade it triggers, and
    /// appends to the cumulative topple series.
    pub fn drop_grain(&mut self, node: NodeId) -> Result<CascadeOutcome, EngineError> {
        if node >= self.graph.node_count() {
            return Err(EngineError::DropOutOfRange {
                node,
                n: self.graph.node_count(),
            });
        }
        self.state.sand[node] = self.units.add_grains(self.state.sand[node], 1);
        self.state.drops += 1;
        self.state.clock += 1;
        let overflowing = self.thresholds[node]
            .as_ref()
            .is_some_and(|k| self.state.sand[node] > *k);
        let outcome = if overflowing {
            self.run_cascade()?
        } else {
            CascadeOutcome::default()
        };
        let previous = self.state.ntnt.last().copied().unwrap_or(0);
        self.state.ntnt.push(previous + outcome.topples);
        Ok(outcome)
    }

    /// Sum of sand over all nodes, sinks included.
    pub fn total_sand(&self) -> f64 {
        self.state.sand.iter().map(|&s| self.units.to_f64(s)).sum()
    }
}
