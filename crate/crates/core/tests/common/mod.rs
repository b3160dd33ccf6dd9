//! Brute-force reference implementations shared by integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfmn_core::ml::{RegressionTree, TrainedEnsemble};
use tfmn_core::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) with at least one edge.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    loop {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if r.gen_bool(p) {
                    g.add_edge(u, v);
                }
            }
        }
        if g.m() > 0 {
            return g;
        }
    }
}

pub fn adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut a = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

/// All-pairs hop distances.
pub fn floyd_warshall(a: &[Vec<bool>]) -> Vec<Vec<Option<usize>>> {
    let n = a.len();
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some(0);
        for j in 0..n {
            if a[i][j] {
                d[i][j] = Some(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| x + y < c) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

fn components(d: &[Vec<Option<usize>>]) -> Vec<Vec<usize>> {
    let n = d.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let c: Vec<usize> = (0..n).filter(|&v| d[s][v].is_some()).collect();
        for &v in &c {
            seen[v] = true;
        }
        out.push(c);
    }
    out
}

fn efficiency(a: &[Vec<bool>]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let d = floyd_warshall(a);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if let Some(x) = d[i][j] {
                    s += 1.0 / x as f64;
                }
            }
        }
    }
    s / (n * (n - 1)) as f64
}

fn sub_adjacency(a: &[Vec<bool>], nodes: &[usize]) -> Vec<Vec<bool>> {
    nodes.iter().map(|&i| nodes.iter().map(|&j| a[i][j]).collect()).collect()
}

/// Shortest-path betweenness by listing every shortest path of every
/// unordered pair.
pub fn betweenness_by_enumeration(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    let d = floyd_warshall(a);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let Some(len) = d[s][t] else { continue };
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let last = *p.last().unwrap();
                if last == t {
                    paths.push(p);
                    continue;
                }
                for v in 0..n {
                    if a[last][v] && d[s][v] == Some(p.len()) && d[v][t].is_some_and(|x| x + p.len() == len) {
                        let mut q = p.clone();
                        q.push(v);
                        stack.push(q);
                    }
                }
            }
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    b[v] += 1.0 / total;
                }
            }
        }
    }
    b
}

/// Degeneracy and size of the corresponding core, by enumerating every
/// node subset.
pub fn core_by_subsets(a: &[Vec<bool>]) -> (usize, usize) {
    let n = a.len();
    let mut best_k = 0;
    let mut union = 0u32;
    for mask in 1u32..(1 << n) {
        let nodes: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let min_deg = nodes.iter().map(|&i| nodes.iter().filter(|&&j| a[i][j]).count()).min().unwrap();
        if min_deg > best_k {
            best_k = min_deg;
            union = 0;
        }
        if min_deg == best_k {
            union |= mask;
        }
    }
    (best_k, union.count_ones() as usize)
}

pub fn clique_by_subsets(a: &[Vec<bool>]) -> usize {
    let n = a.len();
    (1u32..(1 << n))
        .filter(|&mask| {
            let nodes: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            nodes.iter().all(|&i| nodes.iter().all(|&j| i == j || a[i][j]))
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// Modularity by the pairwise double sum.
pub fn modularity_double_sum(a: &[Vec<bool>], partition: &[usize]) -> f64 {
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|r| r.iter().filter(|&&x| x).count() as f64).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if partition[i] == partition[j] {
                q += f64::from(u8::from(a[i][j])) - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Highest modularity over every set partition (restricted growth strings).
pub fn best_modularity(a: &[Vec<bool>]) -> f64 {
    let n = a.len();
    let mut label = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    fn go(i: usize, max: usize, label: &mut Vec<usize>, a: &[Vec<bool>], best: &mut f64) {
        if i == label.len() {
            *best = best.max(modularity_double_sum(a, label));
            return;
        }
        for c in 0..=max + 1 {
            label[i] = c;
            go(i + 1, max.max(c), label, a, best);
        }
    }
    if n > 0 {
        go(1, 0, &mut label, a, &mut best);
    }
    best
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Every metric column recomputed from first principles. Modularity is
/// evaluated on `partition`.
pub fn metric_oracle(g: &Graph, partition: &[usize]) -> [f64; 22] {
    let a = adjacency(g);
    let n = a.len();
    let deg: Vec<usize> = a.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
    let m = deg.iter().sum::<usize>() / 2;
    let d = floyd_warshall(&a);
    let comps = components(&d);
    let size = comps.iter().map(Vec::len).max().unwrap();
    let path_stats = |c: &[usize]| -> (f64, usize) {
        if c.len() < 2 {
            return (0.0, 0);
        }
        let (mut sum, mut cnt, mut diam) = (0usize, 0usize, 0usize);
        for &i in c {
            for &j in c {
                if i != j {
                    let x = d[i][j].unwrap();
                    sum += x;
                    cnt += 1;
                    diam = diam.max(x);
                }
            }
        }
        (sum as f64 / cnt as f64, diam)
    };
    let mut largest: Option<(usize, (f64, usize))> = None;
    for c in comps.iter().filter(|c| c.len() == size) {
        let e = c.iter().map(|&i| deg[i]).sum::<usize>() / 2;
        let s = path_stats(c);
        let key_better = match largest {
            None => true,
            Some((be, bs)) => e > be || (e == be && (s.0 < bs.0 || (s.0 == bs.0 && s.1 < bs.1))),
        };
        if key_better {
            largest = Some((e, s));
        }
    }
    let (mean_sp, diam) = largest.unwrap().1;

    let clustering: Vec<f64> = (0..n)
        .map(|i| {
            let k = deg[i];
            if k < 2 {
                return 0.0;
            }
            let mut t = 0;
            for j in 0..n {
                for l in j + 1..n {
                    if a[i][j] && a[i][l] && a[j][l] {
                        t += 1;
                    }
                }
            }
            t as f64 / (k * (k - 1) / 2) as f64
        })
        .collect();
    let closeness: Vec<f64> = (0..n)
        .map(|i| {
            let reach: Vec<usize> = (0..n).filter(|&j| j != i).filter_map(|j| d[i][j]).collect();
            let total: usize = reach.iter().sum();
            if total == 0 {
                0.0
            } else {
                let r = reach.len() as f64;
                (r / total as f64) * (r / (n - 1) as f64)
            }
        })
        .collect();
    let btw = betweenness_by_enumeration(&a);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if a[i][j] {
                xs.push(deg[i] as f64);
                ys.push(deg[j] as f64);
            }
        }
    }
    let assort = pearson(&xs, &ys).unwrap_or(0.0);
    let local: Vec<f64> = (0..n)
        .map(|i| {
            let nb: Vec<usize> = (0..n).filter(|&j| a[i][j]).collect();
            if nb.len() < 2 {
                0.0
            } else {
                efficiency(&sub_adjacency(&a, &nb))
            }
        })
        .collect();
    let (core, core_size) = core_by_subsets(&a);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    [
        n as f64,
        m as f64,
        comps.len() as f64,
        size as f64,
        size as f64 / n as f64,
        *deg.iter().max().unwrap() as f64,
        2.0 * m as f64 / n as f64,
        2.0 * m as f64 / (n * (n - 1)) as f64,
        mean(&clustering),
        mean_sp,
        diam as f64,
        mean(&closeness),
        max(&closeness),
        mean(&btw),
        max(&btw),
        assort,
        modularity_double_sum(&a, partition),
        efficiency(&a),
        mean(&local),
        core as f64,
        core_size as f64,
        clique_by_subsets(&a) as f64,
    ]
}

/// Expected tree output when only the features in `known` are fixed to
/// `x`; the others are averaged over branches by training cover.
pub fn conditional_expectation(t: &RegressionTree, x: &[f64], known: u32, node: usize) -> f64 {
    let nd = &t.nodes[node];
    match nd.split {
        None => nd.value,
        Some(s) if known >> s.feature & 1 == 1 => {
            let next = if x[s.feature] <= s.threshold { s.left } else { s.right };
            conditional_expectation(t, x, known, next)
        }
        Some(s) => {
            let (l, r) = (&t.nodes[s.left], &t.nodes[s.right]);
            (l.cover * conditional_expectation(t, x, known, s.left)
                + r.cover * conditional_expectation(t, x, known, s.right))
                / nd.cover
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Shapley values of `v` over `p` players by enumerating every coalition.
pub fn shapley_by_coalitions(p: usize, v: impl Fn(u32) -> f64) -> Vec<f64> {
    let mut phi = vec![0.0; p];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        for s in 0u32..(1 << p) {
            if s >> i & 1 == 1 {
                continue;
            }
            let k = s.count_ones() as usize;
            let w = factorial(k) * factorial(p - k - 1) / factorial(p);
            *phi_i += w * (v(s | 1 << i) - v(s));
        }
    }
    phi
}

pub fn ensemble_shapley(model: &TrainedEnsemble, x: &[f64]) -> Vec<f64> {
    let w = model.tree_weight(model.trees.len());
    shapley_by_coalitions(model.n_features, |s| {
        w * model.trees.iter().map(|t| conditional_expectation(t, x, s, 0)).sum::<f64>()
    })
}
