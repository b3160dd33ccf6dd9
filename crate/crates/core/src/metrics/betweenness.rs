//! Betweenness centrality by Brandes' accumulation.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::MetricError;
use crate::graph::Graph;

/// Raw betweenness: for each node `i`, the sum over unordered pairs
/// `{j, k}` not containing `i` of the fraction of shortest `j`-`k` paths
/// through `i`.
pub fn betweenness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut bc = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        for v in 0..n {
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
            preds[v].clear();
        }
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // Each unordered pair was counted from both endpoints.
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

/// Betweenness divided by the number of pairs excluding the node,
/// `(n - 1)(n - 2) / 2`.
pub fn betweenness_normalized(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut bc = betweenness_centrality(g);
    if n > 2 {
        let scale = 2.0 / ((n - 1) * (n - 2)) as f64;
        bc.iter_mut().for_each(|b| *b *= scale);
    }
    bc
}

/// `(mean, max)` raw betweenness over all nodes.
pub fn betweenness_stats(g: &Graph) -> Result<(f64, f64), MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    let bc = betweenness_centrality(g);
    Ok((crate::stats::mean(&bc), bc.iter().copied().fold(0.0, f64::max)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_center() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(betweenness_centrality(&g), vec![3.0, 0.0, 0.0, 0.0]);
        assert_eq!(betweenness_normalized(&g)[0], 1.0);
    }

    #[test]
    fn complete_graph_has_none() {
        let mut g = Graph::new(4);
        for u in 0..4 {
            for v in u + 1..4 {
                g.add_edge(u, v);
            }
        }
        assert!(betweenness_centrality(&g).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn square_splits_paths() {
        // 0-1-2-3-0: opposite corners have two shortest paths.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(betweenness_centrality(&g), vec![0.5; 4]);
    }
}
