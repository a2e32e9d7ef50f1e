use std::collections::VecDeque;

use num::{BigRational, Num};

use super::{MetricError, MetricVector};
use crate::graph::Graph;

pub fn degree_centrality(g: &Graph) -> MetricVector {
    MetricVector::new("Degree", (0..g.node_count()).map(|i| g.degree(i) as f64).collect())
}

/// Which components get eigenvector scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComponentScope {
    /// Largest component only (ties go to the one with the smallest node
    /// id); every other node scores 0.
    #[default]
    Largest,
    /// Every component, each normalized on its own.
    All,
}

/// Principal eigenvector of the adjacency matrix by power iteration,
/// per connected component, unit Euclidean norm within each scored
/// component. Isolated nodes score 0.
///
/// Iterates with `A + I`, which has the same eigenvectors but a strictly
/// dominant top eigenvalue even on bipartite components.
pub fn eigenvector_centrality(
    g: &Graph,
    tol: f64,
    max_iter: usize,
    scope: ComponentScope,
) -> Result<MetricVector, MetricError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MetricError::EmptyGraph);
    }
    let mut components = g.components();
    if scope == ComponentScope::Largest {
        let best = components
            .iter()
            .enumerate()
            .max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i)))
            .map(|(i, _)| i)
            .expect("nonempty graph has a component");
        components = vec![components.swap_remove(best)];
    }
    let mut scores = vec![0.0; n];
    for comp in components.iter().filter(|c| c.len() > 1) {
        let init = 1.0 / (comp.len() as f64).sqrt();
        let mut x = vec![0.0; n];
        for &v in comp {
            x[v] = init;
        }
        let mut next = vec![0.0; n];
        let mut converged = false;
        for _ in 0..max_iter {
            for &v in comp {
                next[v] = x[v] + g.neighbors(v).iter().map(|&w| x[w]).sum::<f64>();
            }
            let norm = comp.iter().map(|&v| next[v] * next[v]).sum::<f64>().sqrt();
            let mut change: f64 = 0.0;
            for &v in comp {
                next[v] /= norm;
                change = change.max((next[v] - x[v]).abs());
            }
            std::mem::swap(&mut x, &mut next);
            if change < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MetricError::NoConvergence { max_iter });
        }
        for &v in comp {
            scores[v] = x[v];
        }
    }
    Ok(MetricVector::new("Eigenvector", scores))
}

/// Brandes' accumulation over any exact or floating number type. Each
/// unordered pair is counted once.
fn brandes<T>(g: &Graph) -> Vec<T>
where
    T: Num + Clone,
{
    let n = g.node_count();
    let mut centrality = vec![T::zero(); n];
    for s in 0..n {
        let mut order = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![T::zero(); n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = T::one();
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] = sigma[w].clone() + sigma[v].clone();
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![T::zero(); n];
        while let Some(w) = order.pop() {
            for &v in &preds[w] {
                let share = sigma[v].clone() / sigma[w].clone() * (T::one() + delta[w].clone());
                delta[v] = delta[v].clone() + share;
            }
            if w != s {
                centrality[w] = centrality[w].clone() + delta[w].clone();
            }
        }
    }
    let two = T::one() + T::one();
    centrality.into_iter().map(|c| c / two.clone()).collect()
}

/// Shortest-path betweenness, unnormalized.
pub fn betweenness_centrality(g: &Graph) -> MetricVector {
    MetricVector::new("Betweenness", brandes::<f64>(g))
}

/// Same accumulation in exact rationals.
pub fn betweenness_centrality_exact(g: &Graph) -> Vec<BigRational> {
    brandes::<BigRational>(g)
}
