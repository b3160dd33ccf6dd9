//! Distance-based measures: shortest paths, closeness and efficiency.

use alloc::vec::Vec;

use super::MetricError;
use crate::graph::{Graph, UNREACHABLE};

/// Mean and maximum BFS distance over unordered pairs of one component.
fn component_path_stats(g: &Graph, comp: &[usize]) -> (f64, usize) {
    let mut sum = 0usize;
    let mut diameter = 0usize;
    for (i, &u) in comp.iter().enumerate() {
        let dist = g.bfs(u);
        for &v in &comp[i + 1..] {
            sum += dist[v];
            diameter = diameter.max(dist[v]);
        }
    }
    let pairs = comp.len() * (comp.len() - 1) / 2;
    (sum as f64 / pairs as f64, diameter)
}

/// Node set of the largest connected component.
///
/// Equal-sized candidates are ranked by more edges, then smaller mean
/// shortest path, then smaller diameter, so the choice does not depend on
/// node labels whenever it can affect a reported value.
pub fn largest_component(g: &Graph) -> Vec<usize> {
    let comps = g.components();
    let Some(size) = comps.iter().map(Vec::len).max() else {
        return Vec::new();
    };
    let mut best: Option<(Vec<usize>, usize, (f64, usize))> = None;
    for comp in comps.into_iter().filter(|c| c.len() == size) {
        let edges: usize = comp.iter().map(|&u| g.degree(u)).sum::<usize>() / 2;
        let stats = if size >= 2 { component_path_stats(g, &comp) } else { (0.0, 0) };
        let better = match &best {
            None => true,
            Some((_, be, bs)) => {
                edges > *be || (edges == *be && (stats.0 < bs.0 || (stats.0 == bs.0 && stats.1 < bs.1)))
            }
        };
        if better {
            best = Some((comp, edges, stats));
        }
    }
    best.map(|b| b.0).unwrap_or_default()
}

/// `(mean shortest path, diameter)` over the largest connected component.
pub fn shortest_path_stats(g: &Graph) -> Result<(f64, usize), MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    let comp = largest_component(g);
    if comp.len() < 2 {
        return Err(MetricError::DegenerateGraph);
    }
    Ok(component_path_stats(g, &comp))
}

/// Closeness of every node: `M / sum of distances` to its `M` reachable
/// nodes, scaled by `M / (n - 1)`; isolated nodes score 0.
pub fn closeness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n();
    (0..n)
        .map(|u| {
            let dist = g.bfs(u);
            let (mut reach, mut total) = (0usize, 0usize);
            for (v, &d) in dist.iter().enumerate() {
                if v != u && d != UNREACHABLE {
                    reach += 1;
                    total += d;
                }
            }
            if total == 0 || n < 2 {
                0.0
            } else {
                let m = reach as f64;
                (m / total as f64) * (m / (n - 1) as f64)
            }
        })
        .collect()
}

/// `(mean closeness, max closeness)` over all nodes.
pub fn closeness_stats(g: &Graph) -> Result<(f64, f64), MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    let c = closeness_centrality(g);
    Ok((crate::stats::mean(&c), c.iter().copied().fold(0.0, f64::max)))
}

/// Mean of `1 / d(u, v)` over unordered distinct pairs; unreachable pairs
/// contribute 0. Graphs with fewer than two nodes have efficiency 0.
pub fn global_efficiency(g: &Graph) -> f64 {
    let n = g.n();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for u in 0..n {
        let dist = g.bfs(u);
        for &d in &dist[u + 1..] {
            if d != UNREACHABLE {
                sum += 1.0 / d as f64;
            }
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Per node, the global efficiency of the subgraph induced on its
/// neighbours (0 below degree 2).
pub fn local_efficiency(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|u| if g.degree(u) < 2 { 0.0 } else { global_efficiency(&g.induced(g.neighbors(u))) })
        .collect()
}

/// `(global efficiency, mean local efficiency)`.
pub fn efficiencies(g: &Graph) -> Result<(f64, f64), MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    Ok((global_efficiency(g), crate::stats::mean(&local_efficiency(g))))
}
