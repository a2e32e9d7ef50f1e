//! Member-level centralities, group-level roster measures, and the
//! statistics used to correlate them with grades.

mod centrality;
mod stats;

use serde::Serialize;
use thiserror::Error;

pub use centrality::{
    betweenness_centrality, betweenness_centrality_exact, degree_centrality, eigenvector_centrality, ComponentScope,
};
pub use stats::{least_squares, mean, pearson, quantile, sample_sd, LinearFit};

use crate::roster::{Gender, Roster};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("power iteration did not converge in {max_iter} iterations; raise the limit")]
    NoConvergence { max_iter: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("{0} input is constant; correlation undefined")]
    Constant(&'static str),
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricVector {
    pub name: String,
    pub values: Vec<f64>,
}

impl MetricVector {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        MetricVector {
            name: name.to_string(),
            values,
        }
    }
}

/// Roster-derived measures for one project group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMeasures {
    pub group: String,
    pub semester: String,
    pub size: usize,
    pub avg_grade: f64,
    pub avg_year: f64,
    /// Fraction of members coded `F`.
    pub gender_ratio: f64,
    /// Mean over members with a recorded intergrade; `None` if nobody has one.
    pub avg_intergrade: Option<f64>,
    /// Node ids of the members.
    pub members: Vec<usize>,
}

/// Per-group measures, groups in order of first appearance.
pub fn group_measures(roster: &Roster) -> Vec<GroupMeasures> {
    let mut order: Vec<&str> = Vec::new();
    for r in roster.records() {
        if !order.contains(&r.group.as_str()) {
            order.push(&r.group);
        }
    }
    order
        .into_iter()
        .map(|group| {
            let members: Vec<usize> = roster
                .records()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.group == group)
                .map(|(i, _)| i)
                .collect();
            let recs: Vec<_> = members.iter().map(|&i| &roster.records()[i]).collect();
            let size = recs.len();
            let grades: Vec<f64> = recs.iter().map(|r| r.grade).collect();
            let years: Vec<f64> = recs.iter().map(|r| f64::from(r.year)).collect();
            let intergrades: Vec<f64> = recs.iter().filter_map(|r| r.intergrade).collect();
            let women = recs.iter().filter(|r| r.gender == Gender::F).count();
            GroupMeasures {
                group: group.to_string(),
                semester: recs[0].semester.clone(),
                size,
                avg_grade: mean(&grades).unwrap(),
                avg_year: mean(&years).unwrap(),
                gender_ratio: women as f64 / size as f64,
                avg_intergrade: mean(&intergrades),
                members,
            }
        })
        .collect()
}
