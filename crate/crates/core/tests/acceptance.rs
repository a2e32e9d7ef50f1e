//! Acceptance gate. Each test prints one `PASS`/`FAIL` line for its
//! criterion.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use nalgebra::{DMatrix, SymmetricEigen};
use num::{BigRational, One, Zero};
use rand::Rng;

use common::{criterion, feasible_total, random_connected, random_dissipation, random_drops, random_graph, ratio, rng};
use sinkless::capacity::{
    capacities, capacities_real, capacities_with_sinks, closed_form_min_k, minimum_feasible_k, validate_capacities,
    CapacityVector,
};
use sinkless::engine::{
    simulate, simulate_asm_oracle, DropSchedule, ExactUnits, FloatUnits, Mode, SandLevels, Sandpile, SimulationConfig,
};
use sinkless::experiments::{correlation_table, ntnt_tail_fit, run_sweep, EigenSettings, Level, Network, SweepConfig};
use sinkless::graph::{grid_with_border_sinks, star_graph, Graph, NodeId};
use sinkless::metrics::{betweenness_centrality_exact, eigenvector_centrality, ComponentScope};
use sinkless::numeric::Dissipation;
use sinkless::roster::{build_fan, emit_roster, generate_synthetic_roster, GradeBands, Roster, RosterSpec};
use sinkless::Arithmetic;

const GRAINS_PER_RUN: u64 = 2500;

fn tenth() -> Dissipation {
    Dissipation::new(1, 10).unwrap()
}

fn synthetic_fan(seed: u64) -> (Roster, Graph) {
    let roster = generate_synthetic_roster(&RosterSpec::default(), seed).unwrap();
    let graph = build_fan(&roster);
    (roster, graph)
}

#[test]
fn c01_conservation() {
    criterion(1, "conservation after every cascade", || {
        let mut r = rng(101);
        let mut worst_float: f64 = 0.0;
        for case in 0..100 {
            let n = r.gen_range(2..=53);
            let density = r.gen_range(0.0..0.3);
            let g = random_connected(&mut r, n, density);
            let exponent = r.gen_range(-2..=2);
            let dissipation = random_dissipation(&mut r);
            let total = feasible_total(&mut r, &g, exponent, dissipation);
            let k = CapacityVector::exact(capacities(&g, &total, exponent).unwrap());
            assert!(validate_capacities(&g, &k, dissipation).passed());
            let drops: Vec<NodeId> = DropSchedule::random(case, (0..n).collect())
                .take(GRAINS_PER_RUN as usize)
                .collect();

            let units = ExactUnits::new(dissipation);
            let mut exact = Sandpile::new(&g, &k, units).unwrap();
            let mut float = Sandpile::new(&g, &k, FloatUnits::new(dissipation)).unwrap();
            for &node in &drops {
                exact.drop_grain(node).unwrap();
                let s = exact.state();
                let mass: i64 = s.sand.iter().sum();
                let expected = units.grain * s.drops as i64 - units.blow * s.total_topples() as i64;
                assert_eq!(mass, expected, "case {case}: exact mass drifted");

                float.drop_grain(node).unwrap();
                let s = float.state();
                let mass: f64 = s.sand.iter().sum();
                let expected = s.drops as f64 - dissipation.as_f64() * s.total_topples() as f64;
                let err = (mass - expected).abs();
                worst_float = worst_float.max(err);
                assert!(err <= 1e-9, "case {case}: float error {err}");
            }
        }
        format!("100 graphs x {GRAINS_PER_RUN} grains, exact equality, worst double error {worst_float:.1e}")
    });
}

#[test]
fn c02_termination_bound() {
    criterion(2, "total topples <= X/g", || {
        let mut r = rng(202);
        let mut runs = 0;
        for case in 0..60 {
            let n = r.gen_range(2..=53);
            let density = r.gen_range(0.0..0.4);
            let g = random_connected(&mut r, n, density);
            let exponent = r.gen_range(-2..=2);
            let dissipation = random_dissipation(&mut r);
            let total = feasible_total(&mut r, &g, exponent, dissipation);
            let k = CapacityVector::exact(capacities(&g, &total, exponent).unwrap());
            for arithmetic in [Arithmetic::Exact, Arithmetic::Float] {
                let cfg = SimulationConfig {
                    arithmetic,
                    ..SimulationConfig::new(&g, &k, dissipation, GRAINS_PER_RUN, case)
                };
                let res = simulate(&cfg).unwrap();
                // topples * p <= X * q, i.e. topples <= X / g
                assert!(
                    res.total_topples() as i64 * dissipation.numer() <= GRAINS_PER_RUN as i64 * dissipation.denom(),
                    "case {case}: {} topples",
                    res.total_topples()
                );
                runs += 1;
            }
        }
        let (_, fan) = synthetic_fan(1);
        let k = CapacityVector::exact(capacities(&fan, &BigRational::from_integer(880.into()), 2).unwrap());
        let mut most = 0;
        for seed in 0..20 {
            let res = simulate(&SimulationConfig::new(&fan, &k, tenth(), GRAINS_PER_RUN, seed)).unwrap();
            most = most.max(res.total_topples());
            assert!(res.total_topples() <= 25_000);
            runs += 1;
        }
        format!("{runs} simulations; 53-node network at X=2500, g=0.1: at most {most} of 25000")
    });
}

/// Classic sandpile on a `w` x `h` board: a cell holding more than 3 grains
/// loses 4, one to each side; grains pushed off the board are lost. Cells
/// are relaxed one at a time.
fn board_sandpile(w: usize, h: usize, drops: &[(usize, usize)]) -> (Vec<Vec<i64>>, Vec<Vec<u64>>) {
    let mut z = vec![vec![0i64; w]; h];
    let mut t = vec![vec![0u64; w]; h];
    for &(x, y) in drops {
        z[y][x] += 1;
        loop {
            let mut unstable = None;
            'scan: for (yy, row) in z.iter().enumerate() {
                for (xx, &v) in row.iter().enumerate() {
                    if v > 3 {
                        unstable = Some((xx, yy));
                        break 'scan;
                    }
                }
            }
            let Some((xx, yy)) = unstable else { break };
            z[yy][xx] -= 4;
            t[yy][xx] += 1;
            let (xi, yi) = (xx as i64, yy as i64);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (xi + dx, yi + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    z[ny as usize][nx as usize] += 1;
                }
            }
        }
    }
    (z, t)
}

#[test]
fn c03_classic_reduction() {
    criterion(3, "g=0 with sinks matches the classic 3x3 board", || {
        let (w, h) = (3, 3);
        let (g, sinks) = grid_with_border_sinks(w, h);
        let k =
            CapacityVector::exact(capacities_with_sinks(&g, &BigRational::from_integer(27.into()), 0, &sinks).unwrap())
                .with_sinks(&sinks);
        assert!((0..9).all(|c| k.get_exact(c) == Some(&BigRational::from_integer(3.into()))));
        let mut r = rng(303);
        let cells: Vec<(usize, usize)> = (0..1000).map(|_| (r.gen_range(0..w), r.gen_range(0..h))).collect();
        let drops: Vec<NodeId> = cells.iter().map(|&(x, y)| y * w + x).collect();
        let (board, board_topples) = board_sandpile(w, h, &cells);

        let cfg = SimulationConfig {
            mode: Mode::AsmOracle,
            drops: Some(&drops),
            ..SimulationConfig::new(&g, &k, Dissipation::zero(), drops.len() as u64, 0)
        };
        let engine = simulate(&cfg).unwrap();
        let worklist = simulate_asm_oracle(&g, &k, &drops).unwrap();
        let SandLevels::Exact { units, denom } = &engine.final_sand else {
            panic!("exact run")
        };
        assert_eq!(*denom, 1);
        for y in 0..h {
            for x in 0..w {
                let c = y * w + x;
                assert_eq!(units[c], board[y][x], "sand at ({x}, {y})");
                assert_eq!(engine.topples[c], board_topples[y][x], "topples at ({x}, {y})");
            }
        }
        assert_eq!(worklist.final_sand, engine.final_sand);
        assert_eq!(worklist.topples, engine.topples);
        let total: u64 = board_topples.iter().flatten().sum();
        format!("1000 drops, {total} topples, final state and per-cell counts identical")
    });
}

#[test]
fn c04_unit_dissipation_is_a_sink() {
    criterion(4, "g=1 equals the classic model with an all-adjacent sink", || {
        let mut r = rng(404);
        let one = Dissipation::new(1, 1).unwrap();
        for case in 0..20 {
            let n = r.gen_range(2..=10);
            let density = r.gen_range(0.0..0.6);
            let g = random_connected(&mut r, n, density);
            let exponent = r.gen_range(-2..=2);
            let total = feasible_total(&mut r, &g, exponent, one);
            let k = capacities(&g, &total, exponent).unwrap();
            let candidates: Vec<NodeId> = (0..n).collect();
            let drops = random_drops(&mut r, &candidates, 400);

            let sinkless_k = CapacityVector::exact(k.clone());
            let cfg = SimulationConfig {
                drops: Some(&drops),
                ..SimulationConfig::new(&g, &sinkless_k, one, drops.len() as u64, 0)
            };
            let sinkless = simulate(&cfg).unwrap();

            let (hubbed, hub) = g.with_hub(0..n);
            let mut hub_k = k;
            hub_k.push(BigRational::zero());
            let hub_k = CapacityVector::exact(hub_k).with_sinks(&[hub]);
            let cfg = SimulationConfig {
                mode: Mode::AsmOracle,
                drops: Some(&drops),
                ..SimulationConfig::new(&hubbed, &hub_k, Dissipation::zero(), drops.len() as u64, 0)
            };
            let classic = simulate(&cfg).unwrap();
            assert_eq!(sinkless.topples[..], classic.topples[..n], "case {case}");
            assert_eq!(
                sinkless.final_sand.to_f64()[..],
                classic.final_sand.to_f64()[..n],
                "case {case}"
            );
            let oracle = simulate_asm_oracle(&hubbed, &hub_k, &drops).unwrap();
            assert_eq!(oracle.topples, classic.topples, "case {case}");
        }
        "20 graphs, 400 forced drops each, per-node counts identical".to_string()
    });
}

#[test]
fn c05_capacity_properties() {
    criterion(5, "capacity sums, uniformity, monotonicity", || {
        let mut r = rng(505);
        for case in 0..1000 {
            let n = r.gen_range(2..=30);
            let density = r.gen_range(0.0..0.5);
            let g = random_connected(&mut r, n, density);
            let exponent = r.gen_range(-3..=3);
            let total = ratio(r.gen_range(1..5000), r.gen_range(1..20));
            let k = capacities(&g, &total, exponent).unwrap();
            assert_eq!(k.iter().cloned().sum::<BigRational>(), total, "case {case}");
            for i in 0..n {
                for j in 0..n {
                    let (di, dj) = (g.degree(i), g.degree(j));
                    if exponent == 0 || di == dj {
                        assert_eq!(k[i], k[j], "case {case}");
                    } else if (di < dj) == (exponent > 0) {
                        assert!(k[i] < k[j], "case {case}");
                    }
                }
            }
            let total_f = sinkless::numeric::to_f64(&total);
            let real = capacities_real(&g, total_f, f64::from(exponent), &[]).unwrap();
            let sum: f64 = real.iter().sum();
            assert!((sum - total_f).abs() <= 1e-12 * total_f, "case {case}");
        }

        // star with three leaves, P = -1, g = 1/10: the closed-form bound is
        // (min DEG + g) * sum DEG^P / max DEG = (11/10) * (10/3) / 3 = 11/9
        let star = star_graph(3);
        let bound = closed_form_min_k(&star, -1, tenth()).unwrap();
        assert_eq!(bound, ratio(11, 9));
        let k = CapacityVector::exact(capacities(&star, &bound, -1).unwrap());
        let report = validate_capacities(&star, &k, tenth());
        assert!(!report.passed());
        assert!(!report.nodes[0].ok);
        // center share (1/3) / (10/3) = 1/10, leaves 3/10
        assert_eq!(k.get_exact(0), Some(&ratio(11, 90)));
        assert_eq!(k.get_exact(1), Some(&ratio(11, 30)));
        let at_ten = CapacityVector::exact(capacities(&star, &BigRational::from_integer(10.into()), -1).unwrap());
        let bad: Vec<NodeId> = validate_capacities(&star, &at_ten, tenth())
            .violations()
            .map(|v| v.node)
            .collect();
        assert_eq!(bad, vec![0]);
        // center needs 3 + 1/10 of a 1/3 share in 10/3: K = 31
        assert_eq!(
            minimum_feasible_k(&star, -1, tenth()).unwrap(),
            BigRational::from_integer(31.into())
        );
        "1000 graphs; star at closed-form bound 11/9 rejected (center 11/90 < 3.1)".to_string()
    });
}

/// Betweenness by listing every shortest path between every pair.
fn enumerated_betweenness(g: &Graph) -> Vec<BigRational> {
    let n = g.node_count();
    let mut out = vec![BigRational::zero(); n];
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut frontier = vec![s];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in g.neighbors(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        for t in s + 1..n {
            if dist[t] == usize::MAX {
                continue;
            }
            let mut paths: Vec<Vec<NodeId>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if last == t {
                    paths.push(path);
                    continue;
                }
                for &w in g.neighbors(last) {
                    if dist[w] == dist[last] + 1 && path.len() < dist[t] + 1 {
                        let mut longer = path.clone();
                        longer.push(w);
                        stack.push(longer);
                    }
                }
            }
            let total = BigRational::from_integer(paths.len().into());
            for (v, score) in out.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                *score += BigRational::from_integer(through.into()) / &total;
            }
        }
    }
    out
}

#[test]
fn c06_centrality_oracles() {
    criterion(6, "betweenness and eigenvector oracles", || {
        let mut r = rng(606);
        let mut worst: f64 = 0.0;
        for case in 0..200 {
            let n = r.gen_range(1..=7);
            let density = r.gen_range(0.15..0.9);
            let g = random_graph(&mut r, n, density);
            assert_eq!(
                betweenness_centrality_exact(&g),
                enumerated_betweenness(&g),
                "case {case}"
            );

            let scores = eigenvector_centrality(&g, 1e-13, 1_000_000, ComponentScope::All).unwrap();
            for comp in g.components() {
                if comp.len() == 1 {
                    assert_eq!(scores.values[comp[0]], 0.0);
                    continue;
                }
                let m = comp.len();
                let a = DMatrix::from_fn(m, m, |i, j| if g.has_edge(comp[i], comp[j]) { 1.0 } else { 0.0 });
                let eig = SymmetricEigen::new(a);
                let top = eig.eigenvalues.imax();
                let v = eig.eigenvectors.column(top);
                let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
                for (i, &node) in comp.iter().enumerate() {
                    let err = (scores.values[node] - sign * v[i]).abs();
                    worst = worst.max(err);
                    assert!(err <= 1e-6, "case {case}: node {node} off by {err}");
                }
            }
        }
        format!("200 graphs n <= 7; betweenness exact, eigenvector worst error {worst:.1e}")
    });
}

fn desk_networks() -> Vec<Network> {
    (1..=4)
        .map(|seed| {
            let (roster, graph) = synthetic_fan(seed);
            Network::new(&format!("synthetic-{seed}"), graph, roster).unwrap()
        })
        .collect()
}

#[test]
fn c07_sweep_accounting() {
    criterion(7, "sweep grain accounting", || {
        let cfg = SweepConfig {
            networks: desk_networks(),
            exponents: vec![-2, -1, 0, 1, 2],
            total_capacity: BigRational::from_integer(1000.into()),
            dissipation: tenth(),
            grains: GRAINS_PER_RUN,
            runs: 10,
            base_seed: 7,
            arithmetic: Arithmetic::Exact,
            keep_series: false,
            bands: GradeBands::default(),
        };
        let result = run_sweep(&cfg, Some(1)).unwrap();
        assert_eq!(result.configs.len(), 20);
        for c in &result.configs {
            assert_eq!(c.runs.len(), 10);
            assert!(c.runs.iter().all(|run| run.grains == GRAINS_PER_RUN));
        }
        assert_eq!(result.total_grains, 500_000);
        assert_eq!(result.total_grains * 100, 50_000_000);
        format!("{} grains; x100 = {}", result.total_grains, result.total_grains * 100)
    });
}

#[test]
fn c08_linear_tail() {
    criterion(8, "mean cumulative topples linear after burn-in", || {
        let (roster, graph) = synthetic_fan(1);
        assert_eq!(graph.node_count(), 53);
        let cfg = SweepConfig {
            networks: vec![Network::new("fan", graph, roster).unwrap()],
            exponents: vec![2],
            total_capacity: BigRational::from_integer(880.into()),
            dissipation: tenth(),
            grains: GRAINS_PER_RUN,
            runs: 100,
            base_seed: 8,
            arithmetic: Arithmetic::Exact,
            keep_series: false,
            bands: GradeBands::default(),
        };
        let result = run_sweep(&cfg, None).unwrap();
        let fit = ntnt_tail_fit(&result.configs[0].mean_ntnt, 2300).unwrap();
        let r2 = fit.r_squared.expect("tail is not flat");
        assert!(r2 >= 0.999, "r^2 = {r2}");
        format!("slope {:.3} topples/grain, r^2 = {r2:.6}", fit.slope)
    });
}

fn run_cli(dir: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_sinkless"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.insert(key, fs::read(&path).unwrap());
            }
        }
    }
    files
}

/// File contents without the provenance header (which records the flags).
fn without_header(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.starts_with("# sinkless") && !l.trim_start().starts_with("\"generator\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn c09_cli_determinism() {
    criterion(9, "byte-identical reruns, sweep independent of --jobs", || {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let sweep = r#"{"networks":[{"label":"a","roster":"r1.csv","graph":"fan.edges"},{"label":"b","roster":"r2.csv"}],
            "P_values":[0,2],"K":1000,"g":"1/10","X":600,"runs":6,"base_seed":3}"#;
        fs::write(dir.join("sweep.json"), sweep).unwrap();
        fs::write(dir.join("drops.txt"), "0\n4\n4\n4\n4\n4\n4\n1\n").unwrap();
        let steps: Vec<Vec<&str>> = vec![
            vec!["gen-roster", "--seed", "1", "--out", "r1.csv"],
            vec!["gen-roster", "--seed", "2", "--out", "r2.csv"],
            vec!["build-fan", "--roster", "r1.csv", "--out", "fan.edges"],
            vec![
                "grid",
                "--width",
                "3",
                "--height",
                "3",
                "--border-sinks",
                "--out",
                "grid.edges",
            ],
            vec![
                "capacities",
                "--graph",
                "fan.edges",
                "--K",
                "880",
                "--P",
                "2",
                "--g",
                "0.1",
                "--out",
                "k.csv",
            ],
            vec![
                "simulate",
                "--graph",
                "fan.edges",
                "--K",
                "880",
                "--P",
                "2",
                "--g",
                "0.1",
                "--X",
                "2500",
                "--seed",
                "9",
                "--out",
                "run",
            ],
            vec![
                "simulate",
                "--graph",
                "fan.edges",
                "--K",
                "880",
                "--P",
                "2",
                "--g",
                "0.1",
                "--X",
                "2500",
                "--seed",
                "9",
                "--arithmetic",
                "float",
                "--out",
                "run-float",
            ],
            vec![
                "simulate",
                "--graph",
                "grid.edges",
                "--K",
                "27",
                "--P",
                "0",
                "--g",
                "0",
                "--mode",
                "asm-oracle",
                "--sink",
                "9",
                "--sink",
                "10",
                "--sink",
                "11",
                "--sink",
                "12",
                "--sink",
                "13",
                "--sink",
                "14",
                "--sink",
                "15",
                "--sink",
                "16",
                "--sink",
                "17",
                "--sink",
                "18",
                "--sink",
                "19",
                "--sink",
                "20",
                "--drops",
                "drops.txt",
                "--out",
                "asm",
            ],
            vec![
                "metrics",
                "--graph",
                "fan.edges",
                "--roster",
                "r1.csv",
                "--out",
                "metrics",
            ],
            vec![
                "correlate",
                "--roster",
                "r1.csv",
                "--graph",
                "fan.edges",
                "--topples",
                "run/topples.csv",
                "--out",
                "corr.csv",
            ],
            vec!["sweep", "--config", "sweep.json", "--jobs", "1", "--out", "sweep-1"],
        ];
        let mut checked = 0;
        for args in &steps {
            assert_eq!(run_cli(dir, args), 0, "{args:?}");
            let first = snapshot(dir);
            assert_eq!(run_cli(dir, args), 0, "{args:?}");
            let second = snapshot(dir);
            assert_eq!(first, second, "rerun of {args:?} changed artifacts");
            checked += 1;
        }
        let ntnt = fs::read_to_string(dir.join("run/ntnt.csv")).unwrap();
        assert_eq!(ntnt.lines().filter(|l| !l.starts_with('#')).count(), 2501);
        for (name, bytes) in snapshot(dir) {
            if name.ends_with(".csv") || name.ends_with(".edges") || name.ends_with(".labels") {
                assert!(bytes.starts_with(b"# sinkless "), "{name} lacks its header");
            }
        }

        assert_eq!(
            run_cli(
                dir,
                &["sweep", "--config", "sweep.json", "--jobs", "4", "--out", "sweep-4"]
            ),
            0
        );
        let one = snapshot(&dir.join("sweep-1"));
        let four = snapshot(&dir.join("sweep-4"));
        assert_eq!(one.keys().collect::<Vec<_>>(), four.keys().collect::<Vec<_>>());
        for (name, bytes) in &one {
            assert_eq!(
                without_header(bytes),
                without_header(&four[name]),
                "{name} depends on --jobs"
            );
        }

        fs::write(dir.join("star.edges"), "0 1\n0 2\n0 3\n").unwrap();
        assert_eq!(
            run_cli(
                dir,
                &[
                    "capacities",
                    "--graph",
                    "star.edges",
                    "--K",
                    "10",
                    "--P",
                    "-1",
                    "--g",
                    "0.1"
                ]
            ),
            1
        );
        assert_eq!(run_cli(dir, &["simulate", "--no-such-flag"]), 2);
        format!(
            "{checked} invocations rerun identically; {} sweep files equal under --jobs 1 and 4",
            one.len()
        )
    });
}

#[test]
fn c10_table_shape() {
    criterion(10, "correlation table layout", || {
        let (roster, graph) = synthetic_fan(5);
        // grades driven by degree, so the Degree row is exactly 1
        let records = roster
            .records()
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let mut rec = rec.clone();
                rec.grade = 40.0 + graph.degree(i) as f64;
                rec
            })
            .collect();
        let roster = Roster::new(records).unwrap();
        let topples: Vec<f64> = (0..graph.node_count()).map(|i| (i % 7) as f64).collect();
        let rows = correlation_table(&roster, &graph, &topples, EigenSettings::default()).unwrap();
        let layout: Vec<(&str, Level)> = rows.iter().map(|r| (r.metric, r.level)).collect();
        assert_eq!(
            layout,
            vec![
                ("Topples", Level::Member),
                ("Eigenvector", Level::Member),
                ("Degree", Level::Member),
                ("Betweenness", Level::Member),
                ("AvgIntergrade", Level::Group),
                ("AvgYear", Level::Group),
                ("Gender", Level::Group),
                ("Size", Level::Group),
            ]
        );
        let degree = rows[2].rho.unwrap();
        assert!((degree - 1.0).abs() < 1e-12, "Degree rho {degree}");

        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        fs::write(dir.join("roster.csv"), emit_roster(&roster)).unwrap();
        let values: String = topples.iter().enumerate().map(|(i, v)| format!("{i},{v}\n")).collect();
        fs::write(dir.join("topples.csv"), format!("node,value\n{values}")).unwrap();
        let code = run_cli(
            dir,
            &[
                "correlate",
                "--roster",
                "roster.csv",
                "--topples",
                "topples.csv",
                "--out",
                "t.csv",
            ],
        );
        assert_eq!(code, 0);
        let text = fs::read_to_string(dir.join("t.csv")).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "metric,level,rho");
        assert_eq!(body.len(), 9);
        assert_eq!(body[1..].iter().filter(|l| l.contains(",member,")).count(), 4);
        assert_eq!(body[1..].iter().filter(|l| l.contains(",group,")).count(), 4);
        let cli_degree: f64 = body[3].strip_prefix("Degree,member,").unwrap().parse().unwrap();
        assert!((cli_degree - 1.0).abs() < 1e-12);
        format!("4 member + 4 group rows, Degree rho = {degree}")
    });
}

#[test]
fn oracle_helpers_agree_on_tiny_cases() {
    // P3: the middle node is on the single geodesic between the ends
    let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    assert_eq!(
        enumerated_betweenness(&p3),
        vec![BigRational::zero(), BigRational::one(), BigRational::zero()]
    );
    let (z, t) = board_sandpile(3, 3, &[(1, 1); 4]);
    assert_eq!(z, vec![vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]);
    assert_eq!(t[1][1], 1);
}
