//! Graph-theoretic features of a network.
//!
//! All measures are unweighted. Betweenness is the raw pair sum; closeness
//! uses the reachable-node scaling so disconnected networks stay
//! comparable. Shortest-path mean and diameter are taken over the largest
//! connected component only, while clustering, closeness and efficiency
//! average over every node.

mod betweenness;
mod community;
mod paths;
mod structure;

use core::fmt;

pub use betweenness::{betweenness_centrality, betweenness_normalized, betweenness_stats};
pub use community::{detect_communities, modularity, CommunityMethod, Partition};
pub use paths::{
    closeness_centrality, closeness_stats, efficiencies, global_efficiency, largest_component, local_efficiency,
    shortest_path_stats,
};
pub use structure::{assortativity, clustering, core_decomposition, core_numbers, max_clique, mean_clustering};

use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricError {
    EmptyGraph,
    /// The measure is undefined for this graph (e.g. no edges).
    DegenerateGraph,
    InvalidPartition,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricError::EmptyGraph => "graph has no nodes",
            MetricError::DegenerateGraph => "measure undefined on a graph without edges",
            MetricError::InvalidPartition => "partition does not cover the nodes",
        })
    }
}

impl core::error::Error for MetricError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MetricOptions {
    pub community: CommunityMethod,
    pub seed: u64,
}

/// Every structural feature of one network.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricVector {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_components: usize,
    pub largest_component_size: usize,
    pub largest_component_ratio: f64,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub density: f64,
    pub mean_clustering: f64,
    pub mean_shortest_path: f64,
    pub diameter: usize,
    pub mean_closeness: f64,
    pub max_closeness: f64,
    pub mean_betweenness: f64,
    pub max_betweenness: f64,
    pub degree_assortativity: f64,
    /// Set when assortativity is undefined and reported as 0.
    pub assortativity_undefined: bool,
    pub modularity: f64,
    pub global_efficiency: f64,
    pub local_efficiency: f64,
    /// Degeneracy: the largest k with a non-empty k-core.
    pub core_number: usize,
    /// Node count of that k-core.
    pub core_size: usize,
    pub max_clique_size: usize,
}

/// Column names, in [`MetricVector::values`] order.
pub const METRIC_COLUMNS: [&str; 22] = [
    "nodes",
    "edges",
    "components",
    "largest_component",
    "largest_component_ratio",
    "max_degree",
    "mean_degree",
    "density",
    "mean_clustering",
    "mean_shortest_path",
    "diameter",
    "mean_closeness",
    "max_closeness",
    "mean_betweenness",
    "max_betweenness",
    "degree_assortativity",
    "modularity",
    "global_efficiency",
    "local_efficiency",
    "core",
    "core_size",
    "max_clique",
];

/// Human-readable labels matching [`METRIC_COLUMNS`].
pub const METRIC_LABELS: [&str; 22] = [
    "| Nodes |",
    "| Edges |",
    "| Components |",
    "| Largest Component |",
    "Largest Comp. Ratio",
    "Max Degree",
    "Mean Degree",
    "Density",
    "Mean Clustering",
    "Mean Shortest Path",
    "Diameter",
    "Mean Closeness",
    "Max Closeness",
    "Mean Betweenness",
    "Max Betweenness",
    "Mean Deg. Assort.",
    "Modularity",
    "Global Efficiency",
    "Local Efficiency",
    "Core",
    "| Core |",
    "Max Clique",
];

/// Short codes used in result tables for the most frequently selected
/// features.
pub fn feature_code(column: &str) -> Option<&'static str> {
    Some(match column {
        "modularity" => "1",
        "core" => "2",
        "local_efficiency" => "3",
        "max_closeness" => "4",
        "age" => "5",
        "mean_betweenness" => "6",
        "max_betweenness" => "7",
        _ => return None,
    })
}

impl MetricVector {
    /// Compute all features. The graph needs at least one edge.
    pub fn compute(g: &Graph, opts: &MetricOptions) -> Result<MetricVector, MetricError> {
        if g.n() == 0 {
            return Err(MetricError::EmptyGraph);
        }
        if g.m() == 0 {
            return Err(MetricError::DegenerateGraph);
        }
        let n = g.n();
        let m = g.m();
        let comps = g.components();
        let largest = largest_component(g).len();
        let (mean_sp, diameter) = shortest_path_stats(g)?;
        let (mean_c, max_c) = closeness_stats(g)?;
        let (mean_b, max_b) = betweenness_stats(g)?;
        let (assort, undefined) = assortativity(g);
        let partition = detect_communities(g, opts.community, opts.seed)?;
        let (e_glob, e_loc) = efficiencies(g)?;
        let (core_number, core_size) = core_decomposition(g)?;
        Ok(MetricVector {
            n_nodes: n,
            n_edges: m,
            n_components: comps.len(),
            largest_component_size: largest,
            largest_component_ratio: largest as f64 / n as f64,
            max_degree: (0..n).map(|u| g.degree(u)).max().unwrap_or(0),
            mean_degree: 2.0 * m as f64 / n as f64,
            density: density(g),
            mean_clustering: mean_clustering(g)?,
            mean_shortest_path: mean_sp,
            diameter,
            mean_closeness: mean_c,
            max_closeness: max_c,
            mean_betweenness: mean_b,
            max_betweenness: max_b,
            degree_assortativity: assort,
            assortativity_undefined: undefined,
            modularity: modularity(g, &partition)?,
            global_efficiency: e_glob,
            local_efficiency: e_loc,
            core_number,
            core_size,
            max_clique_size: max_clique(g),
        })
    }

    /// Feature values in [`METRIC_COLUMNS`] order.
    pub fn values(&self) -> [f64; 22] {
        [
            self.n_nodes as f64,
            self.n_edges as f64,
            self.n_components as f64,
            self.largest_component_size as f64,
            self.largest_component_ratio,
            self.max_degree as f64,
            self.mean_degree,
            self.density,
            self.mean_clustering,
            self.mean_shortest_path,
            self.diameter as f64,
            self.mean_closeness,
            self.max_closeness,
            self.mean_betweenness,
            self.max_betweenness,
            self.degree_assortativity,
            self.modularity,
            self.global_efficiency,
            self.local_efficiency,
            self.core_number as f64,
            self.core_size as f64,
            self.max_clique_size as f64,
        ]
    }
}

/// `2m / (n (n - 1))`; 0 below two nodes.
pub fn density(g: &Graph) -> f64 {
    let n = g.n();
    if n < 2 {
        return 0.0;
    }
    2.0 * g.m() as f64 / (n * (n - 1)) as f64
}
