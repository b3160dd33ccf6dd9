//! Undirected simple graphs over dense node indices.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Undirected simple graph with sorted adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

/// Marker for unreachable nodes in distance vectors.
pub const UNREACHABLE: usize = usize::MAX;

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph { adj: vec![Vec::new(); n], m: 0 }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Adds `u -- v`; self-loops and duplicates are ignored. Returns whether
    /// an edge was added.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        assert!(u < self.adj.len() && v < self.adj.len(), "edge endpoint out of range");
        if u == v {
            return false;
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u].insert(pos, v);
                let pos = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(pos, u);
                self.m += 1;
                true
            }
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Subgraph induced on `nodes`, reindexed in the given order.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &u) in nodes.iter().enumerate() {
            index[u] = i;
        }
        let mut g = Graph::new(nodes.len());
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &self.adj[u] {
                let j = index[v];
                if j != usize::MAX && j > i {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Copy with node `u` renamed to `perm[u]`.
    pub fn relabeled(&self, perm: &[usize]) -> Graph {
        let mut g = Graph::new(self.n());
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]);
        }
        g
    }

    /// BFS hop counts from `src`; [`UNREACHABLE`] where no path exists.
    pub fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.n()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}
