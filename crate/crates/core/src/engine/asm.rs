use num::ToPrimitive;

use super::{EngineError, SandLevels, SimulationResult};
use crate::capacity::CapacityVector;
use crate::graph::{Graph, NodeId};

/// Classic sandpile with whole grains: a node holding more than `k` grains
/// sends one grain to each neighbor; sinks absorb and never topple.
///
/// Relaxation is sequential from a worklist rather than synchronous, so
/// agreement with [`super::simulate`] in [`super::Mode::AsmOracle`] rests on
/// the abelian property and not on shared code.
pub fn simulate_asm_oracle(
    graph: &Graph,
    capacities: &CapacityVector,
    drops: &[NodeId],
) -> Result<SimulationResult, EngineError> {
    let n = graph.node_count();
    if capacities.len() != n {
        return Err(EngineError::LengthMismatch {
            expected: n,
            found: capacities.len(),
        });
    }
    if capacities.sinks().is_empty() {
        return Err(EngineError::NoSink);
    }
    let stranded = graph.unreachable_from(capacities.sinks());
    if !stranded.is_empty() {
        return Err(EngineError::SinkUnreachable(stranded));
    }

    // Sand is integral, so `S > k` is `S > floor(k)`.
    let mut limit: Vec<Option<i64>> = Vec::with_capacity(n);
    for i in 0..n {
        if capacities.is_sink(i) {
            limit.push(None);
            continue;
        }
        let floor = match capacities.get_exact(i) {
            Some(k) => k.floor().to_integer().to_i64(),
            None => Some(capacities.get_f64(i).floor() as i64),
        };
        let floor = floor.ok_or(EngineError::ThresholdOverflow(i))?;
        if floor + 1 < graph.degree(i) as i64 {
            return Err(EngineError::InfeasibleCapacity {
                node: i,
                capacity: capacities.get_f64(i),
                required: graph.degree(i) as f64 - 1.0,
            });
        }
        limit.push(Some(floor));
    }

    let mut sand = vec![0i64; n];
    let mut topples = vec![0u64; n];
    let mut ntnt = Vec::with_capacity(drops.len());
    let mut total = 0u64;
    let mut worklist: Vec<NodeId> = Vec::new();
    for &site in drops {
        if site >= n {
            return Err(EngineError::DropOutOfRange { node: site, n });
        }
        if limit[site].is_none() {
            return Err(EngineError::DropOnSink(site));
        }
        sand[site] += 1;
        worklist.push(site);
        while let Some(v) = worklist.pop() {
            let Some(cap) = limit[v] else { continue };
            while sand[v] > cap {
                sand[v] -= graph.degree(v) as i64;
                topples[v] += 1;
                total += 1;
                for &w in graph.neighbors(v) {
                    sand[w] += 1;
                    if limit[w].is_some_and(|c| sand[w] > c) {
                        worklist.push(w);
                    }
                }
            }
        }
        ntnt.push(total);
    }
    Ok(SimulationResult {
        final_sand: SandLevels::Exact { units: sand, denom: 1 },
        topples,
        ntnt,
    })
}
