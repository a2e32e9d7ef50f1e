//! Undirected simple graphs, edge-list I/O, and the lattice constructor used
//! for classic sandpile checks.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: endpoint {node} out of range for {n} nodes")]
    EndpointOutOfRange { line: usize, node: usize, n: usize },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("line {line}: expected two node ids, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("label count {labels} does not match node count {n}")]
    LabelCount { labels: usize, n: usize },
}

/// An undirected simple graph on nodes `0..n`.
///
/// Adjacency lists are kept sorted and free of duplicates, so the relation is
/// symmetric with an empty diagonal by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    labels: Option<Vec<String>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            labels: None,
        }
    }

    /// Builds a graph from an edge iterator. Duplicates collapse; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Graph::empty(n);
        for (idx, (a, b)) in edges.into_iter().enumerate() {
            let line = idx + 1;
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::EndpointOutOfRange { line, node, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop { line, node: a });
            }
            g.adjacency[a].push(b);
            g.adjacency[b].push(a);
        }
        g.normalize();
        Ok(g)
    }

    fn normalize(&mut self) {
        for list in &mut self.adjacency {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, GraphError> {
        if labels.len() != self.node_count() {
            return Err(GraphError::LabelCount {
                labels: labels.len(),
                n: self.node_count(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency.get(a).is_some_and(|list| list.binary_search(&b).is_ok())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().copied().filter(move |&j| j > i).map(move |j| (i, j)))
    }

    /// Returns a copy with one extra node joined to every listed node.
    /// The new node's id is the old node count.
    pub fn with_hub(&self, attach: impl IntoIterator<Item = NodeId>) -> (Graph, NodeId) {
        let hub = self.node_count();
        let mut g = Graph {
            adjacency: self.adjacency.clone(),
            labels: None,
        };
        g.adjacency.push(Vec::new());
        for node in attach {
            g.adjacency[node].push(hub);
            g.adjacency[hub].push(node);
        }
        g.normalize();
        (g, hub)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Graph {
        let edges: Vec<_> = self.edges().map(|(a, b)| (perm[a], perm[b])).collect();
        Graph::from_edges(self.node_count(), edges).expect("permutation preserves validity")
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Nodes from which no listed target can be reached.
    pub fn unreachable_from(&self, targets: &[NodeId]) -> Vec<NodeId> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        for &t in targets {
            if t < n && !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (0..n).filter(|&v| !seen[v]).collect()
    }

    /// Serializes as edge-list text, one `i j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

/// Per-node neighbor counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence(pub Vec<usize>);

impl DegreeSequence {
    pub fn min(&self) -> Option<usize> {
        self.0.iter().copied().min()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.iter().copied().max()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

pub fn degree_sequence(g: &Graph) -> DegreeSequence {
    DegreeSequence((0..g.node_count()).map(|i| g.degree(i)).collect())
}

/// Parses edge-list text for a graph of `n` nodes. Blank lines and lines
/// starting with `#` are skipped; line numbers in errors are 1-based and
/// count every physical line.
pub fn load_graph(text: &str, n: usize) -> Result<Graph, GraphError> {
    let mut g = Graph::empty(n);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let parsed = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        let Some((a, b)) = parsed else {
            return Err(GraphError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        for node in [a, b] {
            if node >= n {
                return Err(GraphError::EndpointOutOfRange { line, node, n });
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop { line, node: a });
        }
        g.adjacency[a].push(b);
        g.adjacency[b].push(a);
    }
    g.normalize();
    Ok(g)
}

/// A `width` x `height` four-neighbor lattice. Cell `(x, y)` has id
/// `y * width + x`. With `add_sink`, one extra node (id `width * height`) is
/// joined once to every boundary cell and returned as the sink.
pub fn grid_graph(width: usize, height: usize, add_sink: bool) -> (Graph, Option<NodeId>) {
    let cells = width * height;
    let id = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    let lattice = Graph::from_edges(cells, edges).expect("lattice edges are in range");
    if !add_sink {
        return (lattice, None);
    }
    let boundary = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .filter(|&(x, y)| x == 0 || y == 0 || x + 1 == width || y + 1 == height)
        .map(|(x, y)| id(x, y));
    let (g, sink) = lattice.with_hub(boundary);
    (g, Some(sink))
}

/// A `width` x `height` lattice where every missing neighbor slot is its own
/// degree-one sink, so every cell has degree 4. Sinks follow the cells:
/// top row (left to right), bottom row, left column (top to bottom), right
/// column.
pub fn grid_with_border_sinks(width: usize, height: usize) -> (Graph, Vec<NodeId>) {
    let (lattice, _) = grid_graph(width, height, false);
    let cells = width * height;
    let id = |x: usize, y: usize| y * width + x;
    let mut edges: Vec<(NodeId, NodeId)> = lattice.edges().collect();
    let mut attach = Vec::new();
    attach.extend((0..width).map(|x| id(x, 0)));
    attach.extend((0..width).map(|x| id(x, height - 1)));
    attach.extend((0..height).map(|y| id(0, y)));
    attach.extend((0..height).map(|y| id(width - 1, y)));
    let sinks: Vec<NodeId> = (cells..cells + attach.len()).collect();
    edges.extend(attach.into_iter().zip(sinks.iter().copied()));
    let g = Graph::from_edges(cells + sinks.len(), edges).expect("border sink edges are in range");
    (g, sinks)
}

pub fn complete_graph(n: usize) -> Graph {
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    Graph::from_edges(n, edges).expect("complete graph edges are valid")
}

pub fn path_graph(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path edges are valid")
}

/// Star with node 0 at the center.
pub fn star_graph(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("star edges are valid")
}
