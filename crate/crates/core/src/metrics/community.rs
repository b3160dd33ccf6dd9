//! Modularity and community detection.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::MetricError;
use crate::graph::Graph;

/// Community search strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunityMethod {
    /// Agglomerative greedy modularity maximization (Clauset-Newman-Moore).
    #[default]
    Greedy,
    /// Louvain local moving with a seeded node order.
    Louvain,
}

/// Community label per node.
pub type Partition = Vec<usize>;

/// `Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(s_i, s_j)`, evaluated per
/// community as `L_c / m - (D_c / 2m)^2`.
pub fn modularity(g: &Graph, partition: &[usize]) -> Result<f64, MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    if partition.len() != g.n() {
        return Err(MetricError::InvalidPartition);
    }
    if g.m() == 0 {
        return Err(MetricError::DegenerateGraph);
    }
    let m = g.m() as f64;
    let mut inner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for u in 0..g.n() {
        *degree.entry(partition[u]).or_default() += g.degree(u);
    }
    for (u, v) in g.edges() {
        if partition[u] == partition[v] {
            *inner.entry(partition[u]).or_default() += 1;
        }
    }
    Ok(degree
        .iter()
        .map(|(c, &d)| {
            let l = inner.get(c).copied().unwrap_or(0) as f64;
            let share = d as f64 / (2.0 * m);
            l / m - share * share
        })
        .sum())
}

/// Relabel communities `0, 1, ...` in order of first appearance.
fn canonical(partition: &[usize]) -> Partition {
    let mut map = BTreeMap::new();
    partition
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

/// Detect communities; the returned partition never scores below the
/// single-community partition (Q = 0).
pub fn detect_communities(g: &Graph, method: CommunityMethod, seed: u64) -> Result<Partition, MetricError> {
    if g.n() == 0 {
        return Err(MetricError::EmptyGraph);
    }
    if g.m() == 0 {
        return Err(MetricError::DegenerateGraph);
    }
    let found = match method {
        CommunityMethod::Greedy => greedy(g),
        CommunityMethod::Louvain => louvain(g, seed),
    };
    let trivial = vec![0; g.n()];
    if modularity(g, &found)? > modularity(g, &trivial)? {
        Ok(canonical(&found))
    } else {
        Ok(trivial)
    }
}

/// Repeatedly merge the connected pair of communities with the largest
/// modularity gain `e_ij / m - D_i D_j / (2 m^2)` while it is positive;
/// ties go to the lowest community ids.
fn greedy(g: &Graph) -> Partition {
    let n = g.n();
    let m = g.m() as f64;
    let mut links: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
    for (u, v) in g.edges() {
        *links[u].entry(v).or_default() += 1;
        *links[v].entry(u).or_default() += 1;
    }
    let mut degree: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let mut alive = vec![true; n];
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (&j, &e) in links[i].range(i + 1..) {
                let gain = e as f64 / m - (degree[i] * degree[j]) as f64 / (2.0 * m * m);
                if best.is_none_or(|(b, _, _)| gain > b) {
                    best = Some((gain, i, j));
                }
            }
        }
        let Some((gain, i, j)) = best else { break };
        if gain <= 1e-15 {
            break;
        }
        // Merge j into i.
        let moved = core::mem::take(&mut links[j]);
        for (k, e) in moved {
            if k == i {
                continue;
            }
            *links[i].entry(k).or_default() += e;
            let lk = &mut links[k];
            lk.remove(&j);
            *lk.entry(i).or_default() += e;
        }
        links[i].remove(&j);
        degree[i] += degree[j];
        alive[j] = false;
        for l in label.iter_mut() {
            if *l == j {
                *l = i;
            }
        }
    }
    label
}

struct Weighted {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Weighted {
    fn strength(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[u]
    }
}

fn louvain(g: &Graph, seed: u64) -> Partition {
    let mut rng = crate::rng::rng_for(seed, 0x10u64);
    let two_m = 2.0 * g.m() as f64;
    let mut graph = Weighted {
        adj: (0..g.n()).map(|u| g.neighbors(u).iter().map(|&v| (v, 1.0)).collect()).collect(),
        self_loops: vec![0.0; g.n()],
    };
    let mut membership: Vec<usize> = (0..g.n()).collect();
    loop {
        let n = graph.adj.len();
        let k: Vec<f64> = (0..n).map(|u| graph.strength(u)).collect();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = k.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut improved = false;
        loop {
            let mut moved = false;
            for &u in &order {
                let cu = comm[u];
                tot[cu] -= k[u];
                let mut w_to: BTreeMap<usize, f64> = BTreeMap::new();
                w_to.insert(cu, 0.0);
                for &(v, w) in &graph.adj[u] {
                    *w_to.entry(comm[v]).or_default() += w;
                }
                let gain = |c: usize, w: f64| w - tot[c] * k[u] / two_m;
                let mut best = (gain(cu, w_to[&cu]), cu);
                for (&c, &w) in &w_to {
                    let g = gain(c, w);
                    if g > best.0 + 1e-12 {
                        best = (g, c);
                    }
                }
                comm[u] = best.1;
                tot[best.1] += k[u];
                if best.1 != cu {
                    moved = true;
                    improved = true;
                }
            }
            if !moved {
                break;
            }
        }
        if !improved {
            break;
        }
        let comm = canonical(&comm);
        let size = comm.iter().copied().max().map_or(0, |c| c + 1);
        for c in membership.iter_mut() {
            *c = comm[*c];
        }
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); size];
        let mut self_loops = vec![0.0; size];
        for u in 0..n {
            self_loops[comm[u]] += graph.self_loops[u];
            for &(v, w) in &graph.adj[u] {
                if comm[u] == comm[v] {
                    // Seen from both endpoints.
                    self_loops[comm[u]] += w / 2.0;
                } else {
                    *adj[comm[u]].entry(comm[v]).or_default() += w;
                }
            }
        }
        graph = Weighted { adj: adj.into_iter().map(|m| m.into_iter().collect()).collect(), self_loops };
        if size == n {
            break;
        }
    }
    membership
}
