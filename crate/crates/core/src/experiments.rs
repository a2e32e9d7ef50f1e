//! Monte Carlo sweeps over networks and capacity exponents, plus the
//! summaries built from them: mean cumulative topple curves, topples by
//! letter grade, and the member/group correlation table.

use std::fmt::Write as _;

use num::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::capacity::{capacities, validate_capacities, CapacityError, CapacityVector};
use crate::engine::{derive_seed, simulate, Arithmetic, EngineError, SimulationConfig};
use crate::graph::Graph;
use crate::metrics::{
    betweenness_centrality, degree_centrality, eigenvector_centrality, group_measures, least_squares, mean, pearson,
    quantile, sample_sd, ComponentScope, LinearFit, MetricError,
};
use crate::numeric::Dissipation;
use crate::roster::{GradeBands, GradeError, LetterGrade, Roster};

/// Grains after which the mean topple curve is treated as linear.
pub const DEFAULT_BURN_IN: usize = 2300;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep needs at least one network, exponent and run")]
    Empty,
    #[error("network `{network}`: roster has {roster} students but graph has {nodes} nodes")]
    RosterMismatch {
        network: String,
        roster: usize,
        nodes: usize,
    },
    #[error("network `{network}`: node {node} is labelled `{label}` but roster row is `{uid}`")]
    LabelMismatch {
        network: String,
        node: usize,
        label: String,
        uid: String,
    },
    #[error("network `{network}`, P={exponent}: {source}")]
    Capacity {
        network: String,
        exponent: i32,
        source: CapacityError,
    },
    #[error("network `{network}`, P={exponent}: node {node} capacity {capacity} below required {required}")]
    Infeasible {
        network: String,
        exponent: i32,
        node: usize,
        capacity: f64,
        required: f64,
    },
    #[error("network `{network}`, P={exponent}, run {run}: {source}")]
    Engine {
        network: String,
        exponent: i32,
        run: usize,
        source: EngineError,
    },
    #[error(transparent)]
    Grade(#[from] GradeError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// A graph with the roster its nodes come from; node `i` is record `i`.
#[derive(Debug, Clone)]
pub struct Network {
    pub label: String,
    pub graph: Graph,
    pub roster: Roster,
}

impl Network {
    pub fn new(label: &str, graph: Graph, roster: Roster) -> Result<Self, SweepError> {
        if roster.len() != graph.node_count() {
            return Err(SweepError::RosterMismatch {
                network: label.to_string(),
                roster: roster.len(),
                nodes: graph.node_count(),
            });
        }
        if let Some(labels) = graph.labels() {
            for (node, (label_text, rec)) in labels.iter().zip(roster.records()).enumerate() {
                if *label_text != rec.uid {
                    return Err(SweepError::LabelMismatch {
                        network: label.to_string(),
                        node,
                        label: label_text.clone(),
                        uid: rec.uid.clone(),
                    });
                }
            }
        }
        Ok(Network {
            label: label.to_string(),
            graph,
            roster,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub networks: Vec<Network>,
    pub exponents: Vec<i32>,
    pub total_capacity: BigRational,
    pub dissipation: Dissipation,
    pub grains: u64,
    pub runs: usize,
    pub base_seed: u64,
    pub arithmetic: Arithmetic,
    /// Keep every run's cumulative topple series in the result.
    pub keep_series: bool,
    pub bands: GradeBands,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub grains: u64,
    pub total_topples: u64,
    pub topples: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ntnt: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradeStats {
    pub grade: LetterGrade,
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub index: usize,
    pub network: String,
    pub exponent: i32,
    pub grains: u64,
    pub total_topples: u64,
    /// Mean over runs of the cumulative topple count after each grain.
    pub mean_ntnt: Vec<f64>,
    pub topple_mean: Vec<f64>,
    pub topple_sd: Vec<f64>,
    pub grade_stats: Vec<GradeStats>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub total_grains: u64,
    pub configs: Vec<ConfigSummary>,
}

/// Runs every `(network, P)` configuration `runs` times.
///
/// Configuration `i` is network `i / |P|` with exponent `i % |P|`; run `j`
/// of it uses [`derive_seed`]`(base_seed, i, j)`. All capacities are checked
/// before any run starts. Output is identical for any `jobs`.
pub fn run_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<SweepResult, SweepError> {
    if cfg.networks.is_empty() || cfg.exponents.is_empty() || cfg.runs == 0 {
        return Err(SweepError::Empty);
    }
    let mut plans = Vec::new();
    for network in &cfg.networks {
        for &exponent in &cfg.exponents {
            let k =
                capacities(&network.graph, &cfg.total_capacity, exponent).map_err(|source| SweepError::Capacity {
                    network: network.label.clone(),
                    exponent,
                    source,
                })?;
            let k = CapacityVector::exact(k);
            if let Some(bad) = validate_capacities(&network.graph, &k, cfg.dissipation)
                .violations()
                .next()
            {
                return Err(SweepError::Infeasible {
                    network: network.label.clone(),
                    exponent,
                    node: bad.node,
                    capacity: bad.capacity,
                    required: bad.required,
                });
            }
            plans.push((network, exponent, k));
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| SweepError::ThreadPool(e.to_string()))?;

    let mut configs = Vec::with_capacity(plans.len());
    for (index, (network, exponent, k)) in plans.iter().enumerate() {
        let runs: Vec<(RunRecord, Vec<u64>)> = pool.install(|| {
            (0..cfg.runs)
                .into_par_iter()
                .map(|run| {
                    let seed = derive_seed(cfg.base_seed, index as u64, run as u64);
                    let sim = SimulationConfig {
                        arithmetic: cfg.arithmetic,
                        ..SimulationConfig::new(&network.graph, k, cfg.dissipation, cfg.grains, seed)
                    };
                    let result = simulate(&sim).map_err(|source| SweepError::Engine {
                        network: network.label.clone(),
                        exponent: *exponent,
                        run,
                        source,
                    })?;
                    let record = RunRecord {
                        run,
                        seed,
                        grains: result.ntnt.len() as u64,
                        total_topples: result.total_topples(),
                        topples: result.topples,
                        ntnt: cfg.keep_series.then(|| result.ntnt.clone()),
                    };
                    Ok((record, result.ntnt))
                })
                .collect::<Result<Vec<_>, SweepError>>()
        })?;
        configs.push(summarize(index, network, *exponent, runs, cfg)?);
    }
    let total_grains = configs.iter().map(|c| c.grains).sum();
    Ok(SweepResult { total_grains, configs })
}

fn summarize(
    index: usize,
    network: &Network,
    exponent: i32,
    runs: Vec<(RunRecord, Vec<u64>)>,
    cfg: &SweepConfig,
) -> Result<ConfigSummary, SweepError> {
    let n = network.graph.node_count();
    let len = runs.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    let mut sums = vec![0u128; len];
    for (_, series) in &runs {
        for (acc, &v) in sums.iter_mut().zip(series) {
            *acc += u128::from(v);
        }
    }
    let count = runs.len() as f64;
    let mean_ntnt = sums.iter().map(|&s| s as f64 / count).collect();
    let per_node: Vec<Vec<f64>> = (0..n)
        .map(|i| runs.iter().map(|(r, _)| r.topples[i] as f64).collect())
        .collect();
    let topple_mean: Vec<f64> = per_node.iter().map(|v| mean(v).unwrap_or(0.0)).collect();
    let topple_sd = per_node.iter().map(|v| sample_sd(v)).collect();
    let grade_stats = topples_by_grade(&topple_mean, &network.roster, &cfg.bands)?;
    let records: Vec<RunRecord> = runs.into_iter().map(|(r, _)| r).collect();
    Ok(ConfigSummary {
        index,
        network: network.label.clone(),
        exponent,
        grains: records.iter().map(|r| r.grains).sum(),
        total_topples: records.iter().map(|r| r.total_topples).sum(),
        mean_ntnt,
        topple_mean,
        topple_sd,
        grade_stats,
        runs: records,
    })
}

/// Least-squares line through `mean_series[burn_in..]` against position.
pub fn ntnt_tail_fit(mean_series: &[f64], burn_in: usize) -> Result<LinearFit, MetricError> {
    let tail = mean_series.get(burn_in..).unwrap_or(&[]);
    if tail.len() < 2 {
        return Err(MetricError::TooShort(tail.len()));
    }
    let xs: Vec<f64> = (burn_in..mean_series.len()).map(|x| x as f64).collect();
    least_squares(&xs, tail)
}

/// Buckets per-node topple values by letter grade. Every bucket is present,
/// empty ones with count 0.
pub fn topples_by_grade(per_node: &[f64], roster: &Roster, bands: &GradeBands) -> Result<Vec<GradeStats>, SweepError> {
    let mut buckets: [Vec<f64>; 4] = Default::default();
    for (rec, &value) in roster.records().iter().zip(per_node) {
        let letter = bands.classify(rec.grade)?;
        let slot = LetterGrade::ALL.iter().position(|&l| l == letter).unwrap();
        buckets[slot].push(value);
    }
    Ok(LetterGrade::ALL
        .iter()
        .zip(buckets.iter_mut())
        .map(|(&grade, values)| {
            values.sort_by(f64::total_cmp);
            let some = !values.is_empty();
            GradeStats {
                grade,
                count: values.len(),
                mean: mean(values),
                sd: some.then(|| sample_sd(values)),
                min: values.first().copied(),
                q1: quantile(values, 0.25),
                median: quantile(values, 0.5),
                q3: quantile(values, 0.75),
                max: values.last().copied(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Member,
    Group,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Member => "member",
            Level::Group => "group",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub metric: &'static str,
    pub level: Level,
    /// `None` when undefined (a constant input).
    pub rho: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

fn row(metric: &'static str, level: Level, xs: &[f64], ys: &[f64]) -> Result<CorrelationRow, MetricError> {
    let rho = match pearson(xs, ys) {
        Ok(r) => Some(r),
        Err(MetricError::Constant(_)) | Err(MetricError::TooShort(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(CorrelationRow {
        metric,
        level,
        rho,
        samples: xs.len(),
    })
}

/// Pearson correlation of eight measures with grades: four member-level
/// rows (topples, eigenvector, degree, betweenness against each student's
/// grade) and four group-level rows (mean intergrade, mean year, gender
/// ratio, size against each group's mean grade).
///
/// Eigenvector scores are computed per component, so every student is
/// scored within their own semester.
pub fn correlation_table(
    roster: &Roster,
    graph: &Graph,
    topples_per_node: &[f64],
    eigen: EigenSettings,
) -> Result<Vec<CorrelationRow>, MetricError> {
    let grades = roster.grades();
    if grades.len() != graph.node_count() {
        return Err(MetricError::LengthMismatch(grades.len(), graph.node_count()));
    }
    let eigenvector = eigenvector_centrality(graph, eigen.tol, eigen.max_iter, ComponentScope::All)?;
    let mut rows = vec![
        row("Topples", Level::Member, topples_per_node, &grades)?,
        row("Eigenvector", Level::Member, &eigenvector.values, &grades)?,
        row("Degree", Level::Member, &degree_centrality(graph).values, &grades)?,
        row(
            "Betweenness",
            Level::Member,
            &betweenness_centrality(graph).values,
            &grades,
        )?,
    ];

    let groups = group_measures(roster);
    let group_grades: Vec<f64> = groups.iter().map(|g| g.avg_grade).collect();
    let (inter, inter_grades): (Vec<f64>, Vec<f64>) = groups
        .iter()
        .filter_map(|g| g.avg_intergrade.map(|v| (v, g.avg_grade)))
        .unzip();
    rows.push(row("AvgIntergrade", Level::Group, &inter, &inter_grades)?);
    let years: Vec<f64> = groups.iter().map(|g| g.avg_year).collect();
    rows.push(row("AvgYear", Level::Group, &years, &group_grades)?);
    let gender: Vec<f64> = groups.iter().map(|g| g.gender_ratio).collect();
    rows.push(row("Gender", Level::Group, &gender, &group_grades)?);
    let sizes: Vec<f64> = groups.iter().map(|g| g.size as f64).collect();
    rows.push(row("Size", Level::Group, &sizes, &group_grades)?);
    Ok(rows)
}

fn format_rho(rho: Option<f64>) -> String {
    match rho {
        Some(r) => format!("{r:+.4}"),
        None => "undefined".to_string(),
    }
}

/// Side-by-side text rendering: member-level rows on the left, group-level
/// on the right.
pub fn render_correlation_table(rows: &[CorrelationRow]) -> String {
    let member: Vec<_> = rows.iter().filter(|r| r.level == Level::Member).collect();
    let group: Vec<_> = rows.iter().filter(|r| r.level == Level::Group).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{:<26}Group-level", "Member-level");
    let _ = writeln!(out, "{:<14}{:>10}  {:<14}{:>10}", "Metric", "rho", "Metric", "rho");
    for i in 0..member.len().max(group.len()) {
        let left = member
            .get(i)
            .map(|r| format!("{:<14}{:>10}", r.metric, format_rho(r.rho)))
            .unwrap_or_else(|| " ".repeat(24));
        let right = group
            .get(i)
            .map(|r| format!("{:<14}{:>10}", r.metric, format_rho(r.rho)))
            .unwrap_or_default();
        let _ = writeln!(out, "{left}  {right}");
    }
    out
}
