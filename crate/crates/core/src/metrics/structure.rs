//! Local and mesoscale structure: clustering, k-cores, cliques and degree
//! assortativity.

use alloc::vec;
use alloc::vec::Vec;

use super::MetricError;
use crate::graph::Graph;

fn common_neighbors(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Local clustering `2 e_i / (k_i (k_i - 1))`; 0 for degree below 2.
pub fn clustering(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|u| {
            let k = g.degree(u);
            if k < 2 {
                return 0.0;
            }
            let ns = g.neighbors(u);
            // Each neighbour-neighbour edge is seen from both ends.
            let links: usize = ns.iter().map(|&v| common_neighbors(ns, g.neighbors(v))).sum::<usize>() / 2;
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

/// Average local clustering over all nodes.
pub fn mean_clustering(g: &Graph) -> Result<f64, MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    Ok(crate::stats::mean(&clustering(g)))
}

/// Core number of every node by repeated removal of a minimum-degree node.
pub fn core_numbers(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    for u in 0..n {
        buckets[degree[u]].push(u);
    }
    let mut removed = vec![false; n];
    let mut core = vec![0; n];
    let mut k = 0;
    let mut d = 0;
    for _ in 0..n {
        d = d.min(max_deg);
        // Buckets may hold stale entries; skip them lazily.
        let u = loop {
            while buckets[d].is_empty() {
                d += 1;
            }
            let u = buckets[d].pop().unwrap();
            if !removed[u] && degree[u] == d {
                break u;
            }
        };
        k = k.max(d);
        core[u] = k;
        removed[u] = true;
        for &v in g.neighbors(u) {
            if !removed[v] && degree[v] > 0 {
                degree[v] -= 1;
                buckets[degree[v]].push(v);
                d = d.min(degree[v]);
            }
        }
    }
    core
}

/// `(degeneracy, size of the maximum k-core)`.
pub fn core_decomposition(g: &Graph) -> Result<(usize, usize), MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    let core = core_numbers(g);
    let k = core.iter().copied().max().unwrap_or(0);
    Ok((k, core.iter().filter(|&&c| c == k).count()))
}

/// Size of a maximum clique (Bron-Kerbosch with pivoting).
pub fn max_clique(g: &Graph) -> usize {
    fn expand(g: &Graph, size: usize, mut p: Vec<usize>, mut x: Vec<usize>, best: &mut usize) {
        if p.is_empty() {
            if x.is_empty() {
                *best = (*best).max(size);
            }
            return;
        }
        if size + p.len() <= *best {
            return;
        }
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| p.iter().filter(|&&v| g.has_edge(u, v)).count())
            .unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !g.has_edge(pivot, v)).collect();
        for v in candidates {
            let np = p.iter().copied().filter(|&w| g.has_edge(v, w)).collect();
            let nx = x.iter().copied().filter(|&w| g.has_edge(v, w)).collect();
            expand(g, size + 1, np, nx, best);
            p.retain(|&w| w != v);
            x.push(v);
        }
    }
    let mut best = usize::from(g.n() > 0);
    expand(g, 0, (0..g.n()).collect(), Vec::new(), &mut best);
    best
}

/// Pearson correlation of the degrees at either end of each edge.
/// Returns `(r, undefined)`; `r` is 0 when undefined (no edges or no degree
/// variance across edge ends).
pub fn assortativity(g: &Graph) -> (f64, bool) {
    let m = g.m();
    if m == 0 {
        return (0.0, true);
    }
    let (mut sum_prod, mut sum_mean, mut sum_sq) = (0.0, 0.0, 0.0);
    for (u, v) in g.edges() {
        let (j, k) = (g.degree(u) as f64, g.degree(v) as f64);
        sum_prod += j * k;
        sum_mean += 0.5 * (j + k);
        sum_sq += 0.5 * (j * j + k * k);
    }
    let m = m as f64;
    let mean = sum_mean / m;
    let num = sum_prod / m - mean * mean;
    let den = sum_sq / m - mean * mean;
    if den <= 1e-12 * (sum_sq / m) {
        return (0.0, true);
    }
    ((num / den).clamp(-1.0, 1.0), false)
}
