//! The `sinkless` command line.
//!
//! Every artifact starts with a `# sinkless <version> <subcommand> <flags>`
//! line, and the same line is echoed to stderr before any work is done.
//! Files are written to a temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    capacities_real, capacities_with_sinks, closed_form_min_k, minimum_feasible_k, validate_asm_capacities,
    validate_capacities, CapacityVector,
};
use crate::engine::{simulate, Arithmetic, ConfigWarning, Mode, SimulationConfig};
use crate::experiments::{
    correlation_table, ntnt_tail_fit, render_correlation_table, run_sweep, ConfigSummary, CorrelationRow,
    EigenSettings, GradeStats, Network, RunRecord, SweepConfig, DEFAULT_BURN_IN,
};
use crate::graph::{grid_graph, grid_with_border_sinks, load_graph, Graph, NodeId};
use crate::metrics::{
    betweenness_centrality, degree_centrality, eigenvector_centrality, group_measures, ComponentScope, LinearFit,
    MetricVector,
};
use crate::numeric::{parse_rational, to_f64, Dissipation};
use crate::roster::{build_fan, emit_roster, generate_synthetic_roster, parse_roster, GradeBands, Roster, RosterSpec};

const VERSION: &str = env!("CARGO_PKG_VERSION");

type CliResult<T> = Result<T, String>;

#[derive(Parser)]
#[command(
    name = "sinkless",
    version,
    about = "Sinkless sandpile simulation on student networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic roster CSV.
    GenRoster(GenRosterArgs),
    /// Build the friend approximation network of a roster.
    BuildFan(BuildFanArgs),
    /// Write a rectangular lattice, optionally with a sink.
    Grid(GridArgs),
    /// Compute and check degree-power capacities.
    Capacities(CapacitiesArgs),
    /// Drop grains on one network.
    Simulate(SimulateArgs),
    /// Run a batch of simulations from a JSON config.
    Sweep(SweepArgs),
    /// Centralities and group measures.
    Metrics(MetricsArgs),
    /// Correlate topples and centralities with grades.
    Correlate(CorrelateArgs),
}

#[derive(Args, Serialize)]
struct GenRosterArgs {
    #[arg(long, default_value_t = 53)]
    students: usize,
    #[arg(long, default_value_t = 13)]
    groups: usize,
    #[arg(long, default_value_t = 3)]
    semesters: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BuildFanArgs {
    #[arg(long)]
    roster: PathBuf,
    /// Keep only one semester.
    #[arg(long)]
    semester: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GridArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// Add one sink joined to every boundary cell; its id is `width * height`.
    #[arg(long, conflicts_with = "border_sinks")]
    sink: bool,
    /// Give every missing neighbor slot its own sink, so all cells have
    /// degree 4.
    #[arg(long)]
    border_sinks: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Sinkless,
    AsmOracle,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ArithmeticArg {
    Exact,
    Float,
}

#[derive(Args, Serialize)]
struct GraphInput {
    #[arg(long)]
    graph: PathBuf,
    /// Node count; defaults to the `# nodes:` line, the labels file, or the
    /// largest id plus one.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args, Serialize)]
struct CapacityInput {
    /// Network carrying capacity.
    #[arg(long = "K", allow_hyphen_values = true)]
    #[serde(rename = "K")]
    total: String,
    /// Degree exponent.
    #[arg(long = "P", allow_hyphen_values = true)]
    #[serde(rename = "P")]
    exponent: String,
    /// Accept a non-integer P (floating-point capacities).
    #[arg(long)]
    real_p: bool,
    /// Infinite-capacity node; repeatable.
    #[arg(long = "sink")]
    sink: Vec<NodeId>,
}

#[derive(Args, Serialize)]
struct CapacitiesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    #[command(flatten)]
    #[serde(flatten)]
    capacity: CapacityInput,
    #[arg(long)]
    g: String,
    #[arg(long, value_enum, default_value = "sinkless")]
    mode: ModeArg,
    /// CSV `node,k,k_exact`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    #[command(flatten)]
    #[serde(flatten)]
    capacity: CapacityInput,
    #[arg(long)]
    g: String,
    /// Grains to drop; defaults to the length of `--drops`.
    #[arg(long = "X", required_unless_present = "drops")]
    #[serde(rename = "X")]
    grains: Option<u64>,
    /// Required unless `--drops` fixes the schedule.
    #[arg(long, required_unless_present = "drops")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "sinkless")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "exact")]
    arithmetic: ArithmeticArg,
    /// Node ids, one per line, replacing the random schedule.
    #[arg(long)]
    drops: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Keep every run's per-node topples and series in the summary.
    #[arg(long)]
    store_runs: bool,
    #[arg(long, default_value = "90,80,70")]
    grade_bands: String,
}

#[derive(Args, Serialize)]
struct EigenArgs {
    #[arg(long, default_value_t = 1e-10)]
    eigen_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    eigen_max_iter: usize,
}

#[derive(Args, Serialize)]
struct MetricsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    #[arg(long)]
    roster: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    eigen: EigenArgs,
    /// Score every component instead of only the largest.
    #[arg(long)]
    all_components: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CorrelateArgs {
    #[arg(long)]
    roster: PathBuf,
    /// Defaults to the roster's friend approximation network.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// CSV whose first column is the node id and second the topple value.
    #[arg(long)]
    topples: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    eigen: EigenArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code: 0 on success, 1 on a validation failure,
/// 2 on a usage error.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::GenRoster(a) => gen_roster(a),
        Command::BuildFan(a) => build_fan_cmd(a),
        Command::Grid(a) => grid(a),
        Command::Capacities(a) => capacities_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Metrics(a) => metrics(a),
        Command::Correlate(a) => correlate(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

/// `--flag value` rendering of a serialized argument struct, keys sorted.
fn effective_flags<A: Serialize>(args: &A) -> String {
    let value = serde_json::to_value(args).expect("arguments serialize");
    let map: BTreeMap<String, serde_json::Value> = serde_json::from_value(value).expect("arguments are a map");
    let mut out = Vec::new();
    for (key, value) in map {
        let flag = if key.len() == 1 && key.chars().all(|c| c.is_ascii_uppercase()) {
            format!("--{key}")
        } else {
            format!("--{}", key.replace('_', "-"))
        };
        match value {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => out.push(flag),
            serde_json::Value::Array(items) => {
                for item in items {
                    out.push(format!("{flag} {}", plain(&item)));
                }
            }
            other => out.push(format!("{flag} {}", plain(&other))),
        }
    }
    out.join(" ")
}

fn plain(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Echoes the effective configuration and returns the artifact header.
fn announce<A: Serialize>(subcommand: &str, args: &A) -> String {
    let header = format!("# sinkless {VERSION} {subcommand} {}", effective_flags(args));
    eprintln!("{}", &header[2..]);
    header
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| format!("{}: {e}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn csv_text<R, S>(header: &str, columns: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = Vec<S>>,
    S: AsRef<str>,
{
    let mut out = format!("{header}\n{}\n", columns.join(","));
    for row in rows {
        let cells: Vec<&str> = row.iter().map(AsRef::as_ref).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn labels_path(graph: &Path) -> PathBuf {
    graph.with_extension("labels")
}

fn read_labels(path: &Path) -> CliResult<Option<Vec<String>>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut labels = Vec::new();
    for (expected, row) in reader.records().enumerate() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        let id: usize = row
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("{}: bad id in row {}", path.display(), expected + 2))?;
        if id != expected {
            return Err(format!("{}: ids must be 0, 1, 2, ... in order", path.display()));
        }
        labels.push(row.get(1).unwrap_or_default().to_string());
    }
    Ok(Some(labels))
}

/// Reads an edge list and its optional `.labels` sidecar.
fn read_graph(path: &Path, nodes: Option<usize>) -> CliResult<Graph> {
    let text = read_text(path)?;
    let labels = read_labels(&labels_path(path))?;
    let declared = text.lines().find_map(|l| {
        l.trim()
            .strip_prefix('#')
            .and_then(|rest| rest.trim().strip_prefix("nodes:"))
            .and_then(|n| n.trim().parse::<usize>().ok())
    });
    let n = match nodes.or(declared).or(labels.as_ref().map(Vec::len)) {
        Some(n) => n,
        None => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .flat_map(|l| l.split_whitespace().filter_map(|t| t.parse::<usize>().ok()))
            .max()
            .map_or(0, |m| m + 1),
    };
    let graph = load_graph(&text, n).map_err(|e| format!("{}: {e}", path.display()))?;
    match labels {
        Some(labels) => graph
            .with_labels(labels)
            .map_err(|e| format!("{}: {e}", labels_path(path).display())),
        None => Ok(graph),
    }
}

fn write_graph(path: &Path, header: &str, graph: &Graph, extra: &str) -> CliResult<()> {
    let text = format!(
        "{header}\n# nodes: {}\n{extra}{}",
        graph.node_count(),
        graph.to_edge_list()
    );
    write_atomic(path, &text)?;
    if let Some(labels) = graph.labels() {
        let rows = labels.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.clone()]);
        write_atomic(&labels_path(path), &csv_text(header, &["id", "uid"], rows))?;
    }
    Ok(())
}

fn read_roster(path: &Path) -> CliResult<Roster> {
    parse_roster(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reorders the roster so record `i` is node `i` of the graph.
fn align_roster(roster: Roster, graph: &Graph) -> CliResult<Roster> {
    if roster.len() != graph.node_count() {
        return Err(format!(
            "roster has {} students but graph has {} nodes",
            roster.len(),
            graph.node_count()
        ));
    }
    let Some(labels) = graph.labels() else {
        return Ok(roster);
    };
    let records = labels
        .iter()
        .map(|uid| {
            roster
                .node_of(uid)
                .map(|i| roster.records()[i].clone())
                .ok_or_else(|| format!("graph label `{uid}` is not in the roster"))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Roster::new(records).map_err(|e| e.to_string())
}

fn parse_bands(text: &str) -> CliResult<GradeBands> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("--grade-bands `{text}`: expected three numbers"))?;
    match parts[..] {
        [a, b, c] => GradeBands::new(a, b, c).map_err(|e| e.to_string()),
        _ => Err(format!("--grade-bands `{text}`: expected three numbers")),
    }
}

fn gen_roster(a: &GenRosterArgs) -> CliResult<()> {
    let header = announce("gen-roster", a);
    let spec = RosterSpec {
        semesters: a.semesters,
        groups: a.groups,
        students: a.students,
        ..RosterSpec::default()
    };
    let roster = generate_synthetic_roster(&spec, a.seed).map_err(|e| e.to_string())?;
    write_atomic(&a.out, &format!("{header}\n{}", emit_roster(&roster)))
}

fn build_fan_cmd(a: &BuildFanArgs) -> CliResult<()> {
    let header = announce("build-fan", a);
    let mut roster = read_roster(&a.roster)?;
    if let Some(semester) = &a.semester {
        roster = roster.filter_semester(semester).map_err(|e| e.to_string())?;
    }
    write_graph(&a.out, &header, &build_fan(&roster), "")
}

fn grid(a: &GridArgs) -> CliResult<()> {
    let header = announce("grid", a);
    if a.width == 0 || a.height == 0 {
        return Err("grid dimensions must be positive".into());
    }
    let (graph, sinks) = if a.border_sinks {
        grid_with_border_sinks(a.width, a.height)
    } else {
        let (graph, sink) = grid_graph(a.width, a.height, a.sink);
        (graph, sink.into_iter().collect())
    };
    let extra = if sinks.is_empty() {
        String::new()
    } else {
        let ids: Vec<String> = sinks.iter().map(ToString::to_string).collect();
        format!("# sinks: {}\n", ids.join(" "))
    };
    write_graph(&a.out, &header, &graph, &extra)
}

fn parse_dissipation(text: &str) -> CliResult<Dissipation> {
    text.parse().map_err(|e| format!("--g: {e}"))
}

/// Capacities as requested: exact for integer P, floating point with
/// `--real-p`.
fn build_capacities(graph: &Graph, c: &CapacityInput) -> CliResult<CapacityVector> {
    for &s in &c.sink {
        if s >= graph.node_count() {
            return Err(format!("--sink {s} out of range for {} nodes", graph.node_count()));
        }
    }
    if c.real_p {
        let total: f64 = c
            .total
            .parse()
            .map_err(|_| format!("--K `{}` is not a number", c.total))?;
        let exponent: f64 = c
            .exponent
            .parse()
            .map_err(|_| format!("--P `{}` is not a number", c.exponent))?;
        let k = capacities_real(graph, total, exponent, &c.sink).map_err(|e| e.to_string())?;
        return Ok(CapacityVector::float(k).with_sinks(&c.sink));
    }
    let total = parse_rational(&c.total).map_err(|e| format!("--K: {e}"))?;
    let exponent: i32 = c
        .exponent
        .parse()
        .map_err(|_| format!("--P `{}` must be an integer (use --real-p otherwise)", c.exponent))?;
    let k = capacities_with_sinks(graph, &total, exponent, &c.sink).map_err(|e| e.to_string())?;
    Ok(CapacityVector::exact(k).with_sinks(&c.sink))
}

fn render_exact(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        r.to_string()
    }
}

fn capacities_cmd(a: &CapacitiesArgs) -> CliResult<()> {
    let header = announce("capacities", a);
    let graph = read_graph(&a.input.graph, a.input.nodes)?;
    let dissipation = parse_dissipation(&a.g)?;
    let k = build_capacities(&graph, &a.capacity)?;
    if let Some(out) = &a.out {
        let rows = (0..graph.node_count()).map(|i| {
            let exact = k.get_exact(i).map(render_exact).unwrap_or_default();
            let value = if k.is_sink(i) {
                "inf".to_string()
            } else {
                k.get_f64(i).to_string()
            };
            vec![i.to_string(), value, exact]
        });
        write_atomic(out, &csv_text(&header, &["node", "k", "k_exact"], rows))?;
    }
    if !a.capacity.real_p && a.capacity.sink.is_empty() {
        let exponent: i32 = a.capacity.exponent.parse().expect("checked in build_capacities");
        let printed = closed_form_min_k(&graph, exponent, dissipation).map_err(|e| e.to_string())?;
        let needed = minimum_feasible_k(&graph, exponent, dissipation).map_err(|e| e.to_string())?;
        eprintln!(
            "closed-form minimum K: {} ({})",
            render_exact(&printed),
            to_f64(&printed)
        );
        eprintln!("smallest feasible K: {} ({})", render_exact(&needed), to_f64(&needed));
    }
    let report = match a.mode {
        ModeArg::Sinkless => validate_capacities(&graph, &k, dissipation),
        ModeArg::AsmOracle => validate_asm_capacities(&graph, &k),
    };
    let violations: Vec<_> = report.violations().collect();
    if violations.is_empty() {
        eprintln!("all {} nodes feasible", graph.node_count());
        return Ok(());
    }
    for v in &violations {
        eprintln!(
            "node {}: degree {}, capacity {} < required {}",
            v.node,
            graph.degree(v.node),
            v.capacity,
            v.required
        );
    }
    Err(format!(
        "{} of {} nodes have infeasible capacity",
        violations.len(),
        graph.node_count()
    ))
}

fn read_drops(path: &Path) -> CliResult<Vec<NodeId>> {
    read_text(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            l.parse()
                .map_err(|_| format!("{}:{line}: `{l}` is not a node id", path.display()))
        })
        .collect()
}

fn simulate_cmd(a: &SimulateArgs) -> CliResult<()> {
    let header = announce("simulate", a);
    let graph = read_graph(&a.input.graph, a.input.nodes)?;
    let dissipation = parse_dissipation(&a.g)?;
    let k = build_capacities(&graph, &a.capacity)?;
    let drops = a.drops.as_deref().map(read_drops).transpose()?;
    let grains = a
        .grains
        .or(drops.as_ref().map(|d| d.len() as u64))
        .expect("clap requires --X or --drops");
    let arithmetic = match a.arithmetic {
        ArithmeticArg::Exact => Arithmetic::Exact,
        ArithmeticArg::Float => Arithmetic::Float,
    };
    if a.capacity.real_p && arithmetic == Arithmetic::Exact {
        return Err("--real-p gives floating-point capacities; add --arithmetic float".into());
    }
    let config = SimulationConfig {
        mode: match a.mode {
            ModeArg::Sinkless => Mode::Sinkless,
            ModeArg::AsmOracle => Mode::AsmOracle,
        },
        arithmetic,
        drops: drops.as_deref(),
        ..SimulationConfig::new(&graph, &k, dissipation, grains, a.seed.unwrap_or(0))
    };
    for warning in config.check().map_err(|e| e.to_string())? {
        let ConfigWarning::FewGrains { grains, total_capacity } = warning;
        eprintln!(
            "warning: {grains} grains is fewer than 2K = {}; the run may stay subcritical",
            2.0 * total_capacity
        );
    }
    let result = simulate(&config).map_err(|e| e.to_string())?;

    create_dir(&a.out)?;
    let ntnt = result
        .ntnt
        .iter()
        .enumerate()
        .map(|(i, t)| vec![(i + 1).to_string(), t.to_string()]);
    write_atomic(
        &a.out.join("ntnt.csv"),
        &csv_text(&header, &["grain_index", "cumulative_topples"], ntnt),
    )?;
    let topples = result
        .topples
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i.to_string(), t.to_string()]);
    write_atomic(
        &a.out.join("topples.csv"),
        &csv_text(&header, &["node", "count"], topples),
    )?;
    let sand = result
        .final_sand
        .render()
        .into_iter()
        .enumerate()
        .map(|(i, s)| vec![i.to_string(), s]);
    write_atomic(
        &a.out.join("final_state.csv"),
        &csv_text(&header, &["node", "sand"], sand),
    )?;
    eprintln!("{} grains, {} topples", result.ntnt.len(), result.total_topples());
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn text(&self) -> String {
        match self {
            Number::Int(i) => i.to_string(),
            Number::Float(f) => f.to_string(),
            Number::Text(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    label: String,
    roster: PathBuf,
    /// Defaults to the roster's friend approximation network.
    graph: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    networks: Vec<NetworkFile>,
    #[serde(rename = "P_values")]
    p_values: Vec<i32>,
    #[serde(rename = "K")]
    total: Number,
    g: Number,
    #[serde(rename = "X")]
    grains: u64,
    runs: usize,
    base_seed: u64,
    #[serde(default)]
    arithmetic: Arithmetic,
}

#[derive(Serialize)]
struct ConfigReport<'a> {
    index: usize,
    network: &'a str,
    #[serde(rename = "P")]
    exponent: i32,
    runs: usize,
    grains: u64,
    total_topples: u64,
    final_mean_ntnt: Option<f64>,
    tail_fit: Option<LinearFit>,
    grade_stats: &'a [GradeStats],
    correlations: &'a [CorrelationRow],
    directory: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    run_records: Option<&'a [RunRecord]>,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    generator: &'a str,
    #[serde(rename = "K")]
    total: String,
    g: String,
    #[serde(rename = "X")]
    grains: u64,
    runs: usize,
    base_seed: u64,
    burn_in: usize,
    total_grains: u64,
    configs: Vec<ConfigReport<'a>>,
}

fn config_dir(c: &ConfigSummary) -> String {
    let label: String = c
        .network
        .chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || ch == '-' || ch == '_' {
                ch
            } else {
                '_'
            }
        })
        .collect();
    format!("config_{:03}_{label}_P{}", c.index, c.exponent)
}

fn grade_rows(stats: &[GradeStats]) -> impl Iterator<Item = Vec<String>> + '_ {
    stats.iter().map(|s| {
        vec![
            s.grade.to_string(),
            s.count.to_string(),
            opt(s.mean),
            opt(s.sd),
            opt(s.min),
            opt(s.q1),
            opt(s.median),
            opt(s.q3),
            opt(s.max),
        ]
    })
}

const GRADE_COLUMNS: [&str; 9] = ["grade", "count", "mean", "sd", "min", "q1", "median", "q3", "max"];

fn correlation_rows(rows: &[CorrelationRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        vec![
            r.metric.to_string(),
            r.level.as_str().to_string(),
            r.rho.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into()),
        ]
    })
}

fn sweep(a: &SweepArgs) -> CliResult<()> {
    let header = announce("sweep", a);
    let bands = parse_bands(&a.grade_bands)?;
    if a.jobs == Some(0) {
        return Err("--jobs must be at least 1".into());
    }
    let text = read_text(&a.config)?;
    let file: SweepFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", a.config.display()))?;
    let base = a.config.parent().unwrap_or(Path::new(""));
    let mut networks = Vec::new();
    for net in &file.networks {
        let roster = read_roster(&base.join(&net.roster))?;
        let graph = match &net.graph {
            Some(path) => read_graph(&base.join(path), None)?,
            None => build_fan(&roster),
        };
        let roster = align_roster(roster, &graph).map_err(|e| format!("network `{}`: {e}", net.label))?;
        networks.push(Network::new(&net.label, graph, roster).map_err(|e| e.to_string())?);
    }
    let total = parse_rational(&file.total.text()).map_err(|e| format!("K: {e}"))?;
    let dissipation = parse_dissipation(&file.g.text())?;
    let cfg = SweepConfig {
        networks,
        exponents: file.p_values.clone(),
        total_capacity: total.clone(),
        dissipation,
        grains: file.grains,
        runs: file.runs,
        base_seed: file.base_seed,
        arithmetic: file.arithmetic,
        keep_series: a.store_runs,
        bands,
    };
    eprintln!(
        "{} networks x {} exponents x {} runs x {} grains",
        cfg.networks.len(),
        cfg.exponents.len(),
        cfg.runs,
        cfg.grains
    );
    let result = run_sweep(&cfg, a.jobs).map_err(|e| e.to_string())?;

    create_dir(&a.out)?;
    let mut correlations = Vec::new();
    for c in &result.configs {
        let network = &cfg.networks[c.index / cfg.exponents.len()];
        let rows = correlation_table(
            &network.roster,
            &network.graph,
            &c.topple_mean,
            EigenSettings::default(),
        )
        .map_err(|e| format!("network `{}`: {e}", network.label))?;
        correlations.push(rows);
    }
    let mut reports = Vec::new();
    for (c, rows) in result.configs.iter().zip(&correlations) {
        let dir = a.out.join(config_dir(c));
        create_dir(&dir)?;
        let mean = c
            .mean_ntnt
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(i + 1).to_string(), v.to_string()]);
        write_atomic(
            &dir.join("ntnt_mean.csv"),
            &csv_text(&header, &["grain_index", "mean_cumulative_topples"], mean),
        )?;
        write_atomic(
            &dir.join("grade_boxes.csv"),
            &csv_text(&header, &GRADE_COLUMNS, grade_rows(&c.grade_stats)),
        )?;
        let network = &cfg.networks[c.index / cfg.exponents.len()];
        let uids = network.roster.uids();
        let per_node = (0..c.topple_mean.len()).map(|i| {
            vec![
                i.to_string(),
                uids[i].clone(),
                c.topple_mean[i].to_string(),
                c.topple_sd[i].to_string(),
            ]
        });
        write_atomic(
            &dir.join("topples_mean.csv"),
            &csv_text(&header, &["node", "uid", "mean", "sd"], per_node),
        )?;
        write_atomic(
            &dir.join("correlations.csv"),
            &csv_text(&header, &["metric", "level", "rho"], correlation_rows(rows)),
        )?;
        let tail_fit = match ntnt_tail_fit(&c.mean_ntnt, a.burn_in) {
            Ok(fit) => Some(fit),
            Err(e) => {
                eprintln!("config {}: no tail fit ({e})", c.index);
                None
            }
        };
        reports.push(ConfigReport {
            index: c.index,
            network: &c.network,
            exponent: c.exponent,
            runs: c.runs.len(),
            grains: c.grains,
            total_topples: c.total_topples,
            final_mean_ntnt: c.mean_ntnt.last().copied(),
            tail_fit,
            grade_stats: &c.grade_stats,
            correlations: rows,
            directory: config_dir(c),
            run_records: a.store_runs.then_some(c.runs.as_slice()),
        });
    }
    let report = SweepReport {
        generator: &header[2..],
        total: render_exact(&total),
        g: dissipation.to_string(),
        grains: cfg.grains,
        runs: cfg.runs,
        base_seed: cfg.base_seed,
        burn_in: a.burn_in,
        total_grains: result.total_grains,
        configs: reports,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    write_atomic(&a.out.join("sweep_summary.json"), &format!("{json}\n"))?;
    eprintln!("{} grains dropped in total", result.total_grains);
    Ok(())
}

fn metric_csv(header: &str, m: &MetricVector) -> String {
    let rows = m
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), v.to_string()]);
    csv_text(header, &["node", "value"], rows)
}

fn metrics(a: &MetricsArgs) -> CliResult<()> {
    let header = announce("metrics", a);
    let graph = read_graph(&a.input.graph, a.input.nodes)?;
    let scope = if a.all_components {
        ComponentScope::All
    } else {
        ComponentScope::Largest
    };
    let eigen =
        eigenvector_centrality(&graph, a.eigen.eigen_tol, a.eigen.eigen_max_iter, scope).map_err(|e| e.to_string())?;
    create_dir(&a.out)?;
    write_atomic(
        &a.out.join("degree.csv"),
        &metric_csv(&header, &degree_centrality(&graph)),
    )?;
    write_atomic(&a.out.join("eigenvector.csv"), &metric_csv(&header, &eigen))?;
    write_atomic(
        &a.out.join("betweenness.csv"),
        &metric_csv(&header, &betweenness_centrality(&graph)),
    )?;
    if let Some(path) = &a.roster {
        let roster = align_roster(read_roster(path)?, &graph)?;
        let rows = group_measures(&roster).into_iter().map(|g| {
            vec![
                g.group,
                g.semester,
                g.size.to_string(),
                g.avg_grade.to_string(),
                g.avg_year.to_string(),
                g.gender_ratio.to_string(),
                opt(g.avg_intergrade),
            ]
        });
        let columns = [
            "group",
            "semester",
            "size",
            "avg_grade",
            "avg_year",
            "gender_ratio",
            "avg_intergrade",
        ];
        write_atomic(&a.out.join("groups.csv"), &csv_text(&header, &columns, rows))?;
    }
    Ok(())
}

fn read_node_values(path: &Path, n: usize) -> CliResult<Vec<f64>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = vec![None; n];
    for row in reader.records() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = || format!("{}:{line}: expected `node,value`", path.display());
        let node: usize = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let value: f64 = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let slot = values
            .get_mut(node)
            .ok_or_else(|| format!("{}:{line}: node {node} out of range for {n} nodes", path.display()))?;
        *slot = Some(value);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| format!("{}: no value for node {i}", path.display())))
        .collect()
}

fn correlate(a: &CorrelateArgs) -> CliResult<()> {
    let header = announce("correlate", a);
    let roster = read_roster(&a.roster)?;
    let graph = match &a.graph {
        Some(path) => read_graph(path, None)?,
        None => build_fan(&roster),
    };
    let roster = align_roster(roster, &graph)?;
    let topples = read_node_values(&a.topples, graph.node_count())?;
    let settings = EigenSettings {
        tol: a.eigen.eigen_tol,
        max_iter: a.eigen.eigen_max_iter,
    };
    let rows = correlation_table(&roster, &graph, &topples, settings).map_err(|e| e.to_string())?;
    write_atomic(
        &a.out,
        &csv_text(&header, &["metric", "level", "rho"], correlation_rows(&rows)),
    )?;
    eprint!("{}", render_correlation_table(&rows));
    Ok(())
}
