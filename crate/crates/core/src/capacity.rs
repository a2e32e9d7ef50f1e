//! Per-node carrying capacities.
//!
//! The network capacity `K` is split over nodes in proportion to
//! `DEG(i)^P`. A node can only topple safely when its capacity covers
//! everything a topple removes, `k(i) >= DEG(i) + g`; [`validate_capacities`]
//! checks exactly that and is the gate every simulation passes through.

use num::{BigRational, Signed, Zero};
use thiserror::Error;

use crate::graph::{degree_sequence, Graph, NodeId};
use crate::numeric::{to_f64, Dissipation};

#[derive(Debug, Error, PartialEq)]
pub enum CapacityError {
    #[error("node {0} is isolated; degree-power capacities need degree >= 1")]
    IsolatedNode(NodeId),
    #[error("network capacity must be positive, got {0}")]
    NonPositiveTotal(String),
    #[error("sink {sink} out of range for {n} nodes")]
    SinkOutOfRange { sink: NodeId, n: usize },
    #[error("every node is a sink")]
    NoFiniteNodes,
    #[error("exponent {0} is not finite")]
    BadExponent(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapacityValues {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// Capacities for every node; entries at sink positions are ignored and
/// treated as infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVector {
    pub values: CapacityValues,
    sinks: Vec<NodeId>,
}

impl CapacityVector {
    pub fn exact(values: Vec<BigRational>) -> Self {
        CapacityVector {
            values: CapacityValues::Exact(values),
            sinks: Vec::new(),
        }
    }

    pub fn float(values: Vec<f64>) -> Self {
        CapacityVector {
            values: CapacityValues::Float(values),
            sinks: Vec::new(),
        }
    }

    pub fn with_sinks(mut self, sinks: &[NodeId]) -> Self {
        self.sinks = sinks.to_vec();
        self.sinks.sort_unstable();
        self.sinks.dedup();
        self
    }

    pub fn len(&self) -> usize {
        match &self.values {
            CapacityValues::Exact(v) => v.len(),
            CapacityValues::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sinks(&self) -> &[NodeId] {
        &self.sinks
    }

    pub fn is_sink(&self, node: NodeId) -> bool {
        self.sinks.binary_search(&node).is_ok()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.values, CapacityValues::Exact(_))
    }

    /// `f64::INFINITY` at sinks.
    pub fn get_f64(&self, node: NodeId) -> f64 {
        if self.is_sink(node) {
            return f64::INFINITY;
        }
        match &self.values {
            CapacityValues::Exact(v) => to_f64(&v[node]),
            CapacityValues::Float(v) => v[node],
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get_f64(i)).collect()
    }

    pub fn get_exact(&self, node: NodeId) -> Option<&BigRational> {
        match &self.values {
            CapacityValues::Exact(v) if !self.is_sink(node) => Some(&v[node]),
            _ => None,
        }
    }
}

fn degree_power(deg: usize, exponent: i32) -> BigRational {
    let base = BigRational::from_integer(deg.into());
    num::pow::Pow::pow(&base, exponent)
}

/// `k(i) = K * DEG(i)^P / sum_j DEG(j)^P`, exactly.
pub fn capacities(g: &Graph, total: &BigRational, exponent: i32) -> Result<Vec<BigRational>, CapacityError> {
    capacities_with_sinks(g, total, exponent, &[])
}

/// As [`capacities`], distributing `K` over non-sink nodes only. Sink
/// entries are zero in the returned vector.
pub fn capacities_with_sinks(
    g: &Graph,
    total: &BigRational,
    exponent: i32,
    sinks: &[NodeId],
) -> Result<Vec<BigRational>, CapacityError> {
    if !total.is_positive() {
        return Err(CapacityError::NonPositiveTotal(total.to_string()));
    }
    let finite = finite_nodes(g, sinks)?;
    let powers: Vec<(NodeId, BigRational)> = finite
        .iter()
        .map(|&i| (i, degree_power(g.degree(i), exponent)))
        .collect();
    let denom: BigRational = powers.iter().map(|(_, p)| p.clone()).sum();
    let mut k = vec![BigRational::zero(); g.node_count()];
    for (i, p) in powers {
        k[i] = total * p / &denom;
    }
    Ok(k)
}

/// Floating-point variant allowing a real exponent.
pub fn capacities_real(g: &Graph, total: f64, exponent: f64, sinks: &[NodeId]) -> Result<Vec<f64>, CapacityError> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(CapacityError::NonPositiveTotal(total.to_string()));
    }
    if !exponent.is_finite() {
        return Err(CapacityError::BadExponent(exponent));
    }
    let finite = finite_nodes(g, sinks)?;
    let powers: Vec<(NodeId, f64)> = finite
        .iter()
        .map(|&i| (i, (g.degree(i) as f64).powf(exponent)))
        .collect();
    let denom: f64 = powers.iter().map(|(_, p)| p).sum();
    let mut k = vec![0.0; g.node_count()];
    for (i, p) in powers {
        k[i] = total * p / denom;
    }
    Ok(k)
}

fn finite_nodes(g: &Graph, sinks: &[NodeId]) -> Result<Vec<NodeId>, CapacityError> {
    let n = g.node_count();
    if let Some(&sink) = sinks.iter().find(|&&s| s >= n) {
        return Err(CapacityError::SinkOutOfRange { sink, n });
    }
    let finite: Vec<NodeId> = (0..n).filter(|i| !sinks.contains(i)).collect();
    if finite.is_empty() {
        return Err(CapacityError::NoFiniteNodes);
    }
    if let Some(&i) = finite.iter().find(|&&i| g.degree(i) == 0) {
        return Err(CapacityError::IsolatedNode(i));
    }
    Ok(finite)
}

/// The lower bound on `K` in closed form:
/// `(min DEG + g) * sum_j DEG(j)^P / d`, with `d = min DEG` for `P >= 0`
/// and `d = max DEG` for `P < 0`.
///
/// This is not sufficient in general; a star with `P = -1` meets it while
/// its center still fails [`validate_capacities`].
pub fn closed_form_min_k(g: &Graph, exponent: i32, dissipation: Dissipation) -> Result<BigRational, CapacityError> {
    finite_nodes(g, &[])?;
    let degrees = degree_sequence(g);
    let (min, max) = (degrees.min().unwrap(), degrees.max().unwrap());
    let sum: BigRational = degrees.0.iter().map(|&d| degree_power(d, exponent)).sum();
    let divisor = if exponent >= 0 { min } else { max };
    let lead = BigRational::from_integer(min.into()) + dissipation.to_big();
    Ok(lead * sum / BigRational::from_integer(divisor.into()))
}

/// Smallest `K` for which every node satisfies `k(i) >= DEG(i) + g`:
/// `max_i (DEG(i) + g) * sum_j DEG(j)^P / DEG(i)^P`.
pub fn minimum_feasible_k(g: &Graph, exponent: i32, dissipation: Dissipation) -> Result<BigRational, CapacityError> {
    finite_nodes(g, &[])?;
    let degrees = degree_sequence(g);
    let sum: BigRational = degrees.0.iter().map(|&d| degree_power(d, exponent)).sum();
    let gb = dissipation.to_big();
    Ok(degrees
        .0
        .iter()
        .map(|&d| (BigRational::from_integer(d.into()) + &gb) * &sum / degree_power(d, exponent))
        .max()
        .expect("graph has nodes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCheck {
    pub node: NodeId,
    pub capacity: f64,
    pub required: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub nodes: Vec<NodeCheck>,
}

impl CapacityReport {
    pub fn passed(&self) -> bool {
        self.nodes.iter().all(|c| c.ok)
    }

    pub fn violations(&self) -> impl Iterator<Item = &NodeCheck> {
        self.nodes.iter().filter(|c| !c.ok)
    }
}

/// Per-node check of `k(i) >= DEG(i) + g`. Sinks always pass. Exact
/// capacities are compared exactly.
pub fn validate_capacities(g: &Graph, k: &CapacityVector, dissipation: Dissipation) -> CapacityReport {
    let gb = dissipation.to_big();
    let nodes = (0..g.node_count())
        .map(|i| {
            let deg = g.degree(i);
            let required = deg as f64 + dissipation.as_f64();
            let ok = if k.is_sink(i) {
                true
            } else {
                match k.get_exact(i) {
                    Some(exact) => *exact >= BigRational::from_integer(deg.into()) + &gb,
                    None => k.get_f64(i) >= required,
                }
            };
            NodeCheck {
                node: i,
                capacity: k.get_f64(i),
                required,
                ok,
            }
        })
        .collect();
    CapacityReport { nodes }
}

/// Feasibility for whole-grain dynamics without dissipation: a node holding
/// `S > k` grains holds at least `floor(k) + 1`, so it is safe to shed
/// `DEG(i)` grains when `floor(k(i)) + 1 >= DEG(i)`.
pub fn validate_asm_capacities(g: &Graph, k: &CapacityVector) -> CapacityReport {
    let nodes = (0..g.node_count())
        .map(|i| {
            let deg = g.degree(i);
            let ok = k.is_sink(i)
                || match k.get_exact(i) {
                    Some(exact) => {
                        exact.floor() + BigRational::from_integer(1.into()) >= BigRational::from_integer(deg.into())
                    }
                    None => k.get_f64(i).floor() + 1.0 >= deg as f64,
                };
            NodeCheck {
                node: i,
                capacity: k.get_f64(i),
                required: deg as f64 - 1.0,
                ok,
            }
        })
        .collect();
    CapacityReport { nodes }
}
