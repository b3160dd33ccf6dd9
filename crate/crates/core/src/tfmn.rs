//! Network construction: syntactic-distance edges, synonym enrichment and
//! emotion/valence node tags.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::conllu::Transcript;
use crate::graph::Graph;
use crate::lexicon::{EmotionLexicon, EmotionSet, SynonymLexicon, Valence, ValenceLexicon};

/// Default maximum syntactic distance for an edge.
pub const DEFAULT_K: usize = 4;

/// Relations carried by one undirected edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EdgeKinds {
    pub syntactic: bool,
    pub synonym: bool,
}

impl EdgeKinds {
    pub const SYNTACTIC: EdgeKinds = EdgeKinds { syntactic: true, synonym: false };
    pub const SYNONYM: EdgeKinds = EdgeKinds { syntactic: false, synonym: true };

    /// `syntactic`, `synonym` or `syntactic,synonym`.
    pub fn label(self) -> &'static str {
        match (self.syntactic, self.synonym) {
            (true, true) => "syntactic,synonym",
            (true, false) => "syntactic",
            (false, true) => "synonym",
            (false, false) => "",
        }
    }

    pub fn parse_label(s: &str) -> Option<EdgeKinds> {
        let mut k = EdgeKinds::default();
        for part in s.split(',') {
            match part.trim() {
                "syntactic" => k.syntactic = true,
                "synonym" => k.synonym = true,
                _ => return None,
            }
        }
        Some(k)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NodeTag {
    pub valence: Valence,
    pub emotions: EmotionSet,
}

/// Which node pairs synonym enrichment may connect.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynonymScope {
    /// Any two nodes of the network.
    #[default]
    Present,
    /// Only nodes that are already syntactically adjacent.
    Adjacent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TfmnError {
    InvalidK,
    /// No pair of content tokens lies within the distance limit.
    EmptyNetwork(String),
    /// An edge endpoint is not a node, or an edge is a self-loop.
    InvalidEdge(String, String),
}

impl fmt::Display for TfmnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TfmnError::InvalidK => f.write_str("syntactic distance limit k must be >= 1"),
            TfmnError::EmptyNetwork(id) => write!(f, "transcript {id:?} yields an empty network"),
            TfmnError::InvalidEdge(a, b) => write!(f, "invalid edge {a:?} -- {b:?}"),
        }
    }
}

impl core::error::Error for TfmnError {}

/// A textual forma mentis network: lemma nodes, typed undirected edges and
/// per-node emotion/valence tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tfmn {
    k: usize,
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), EdgeKinds>,
    tags: BTreeMap<String, NodeTag>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.into(), b.into())
    } else {
        (b.into(), a.into())
    }
}

impl Tfmn {
    /// Assemble a network from stored parts, checking the simple-graph
    /// invariants.
    pub fn from_parts(
        k: usize,
        nodes: BTreeSet<String>,
        edges: impl IntoIterator<Item = (String, String, EdgeKinds)>,
        tags: BTreeMap<String, NodeTag>,
    ) -> Result<Tfmn, TfmnError> {
        let mut g = Tfmn { k, nodes, edges: BTreeMap::new(), tags };
        for (a, b, kinds) in edges {
            if a == b || !g.nodes.contains(&a) || !g.nodes.contains(&b) {
                return Err(TfmnError::InvalidEdge(a, b));
            }
            g.add_kinds(&a, &b, kinds);
        }
        Ok(g)
    }

    fn add_kinds(&mut self, a: &str, b: &str, kinds: EdgeKinds) {
        let e = self.edges.entry(ordered(a, b)).or_default();
        e.syntactic |= kinds.syntactic;
        e.synonym |= kinds.synonym;
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    /// Edges as `(u, v, kinds)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, EdgeKinds)> {
        self.edges.iter().map(|((a, b), k)| (a.as_str(), b.as_str(), *k))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<EdgeKinds> {
        self.edges.get(&ordered(a, b)).copied()
    }

    /// Tag of `node`; untagged nodes are neutral with no emotions.
    pub fn tag(&self, node: &str) -> NodeTag {
        self.tags.get(node).copied().unwrap_or_default()
    }

    pub fn tags(&self) -> &BTreeMap<String, NodeTag> {
        &self.tags
    }

    pub fn neighbors<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.keys().filter_map(move |(a, b)| {
            if a == node {
                Some(b.as_str())
            } else if b == node {
                Some(a.as_str())
            } else {
                None
            }
        })
    }

    /// Index-based graph for metric computation, nodes in lemma order.
    /// Synonym-only edges are dropped unless `include_synonyms`.
    pub fn to_graph(&self, include_synonyms: bool) -> Graph {
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut g = Graph::new(self.nodes.len());
        for ((a, b), kinds) in &self.edges {
            if kinds.syntactic || (include_synonyms && kinds.synonym) {
                g.add_edge(index[a.as_str()], index[b.as_str()]);
            }
        }
        g
    }
}

/// Link every pair of content tokens (non-stopword, alphabetic, not
/// punctuation) whose dependency-tree distance is at most `k`. Distances are
/// measured over the full parse, punctuation and stopwords included.
pub fn build_syntactic(t: &Transcript, k: usize) -> Result<Tfmn, TfmnError> {
    if k == 0 {
        return Err(TfmnError::InvalidK);
    }
    let mut g = Tfmn { k, nodes: BTreeSet::new(), edges: BTreeMap::new(), tags: BTreeMap::new() };
    for s in &t.sentences {
        let adj = s.adjacency();
        for (i, ti) in s.tokens.iter().enumerate() {
            if !ti.is_content() {
                continue;
            }
            let dist = s.distances_within(&adj, i, k);
            for (j, tj) in s.tokens.iter().enumerate().skip(i + 1) {
                if !tj.is_content() || tj.lemma == ti.lemma || dist[j].is_none() {
                    continue;
                }
                g.nodes.insert(ti.lemma.clone());
                g.nodes.insert(tj.lemma.clone());
                g.add_kinds(&ti.lemma, &tj.lemma, EdgeKinds::SYNTACTIC);
            }
        }
    }
    if g.edges.is_empty() {
        return Err(TfmnError::EmptyNetwork(t.transcript_id.clone()));
    }
    Ok(g)
}

/// Cumulative share of content-token pairs (same sentence) whose tree
/// distance is at most `k`, for `k = 1..=max distance observed`.
pub fn distance_cdf(corpus: &[Transcript]) -> BTreeMap<usize, f64> {
    let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
    let mut total = 0u64;
    for s in corpus.iter().flat_map(|t| &t.sentences) {
        let adj = s.adjacency();
        let n = s.tokens.len();
        for i in 0..n {
            if !s.tokens[i].is_content() {
                continue;
            }
            let dist = s.distances_within(&adj, i, n);
            for j in i + 1..n {
                if let (true, Some(d)) = (s.tokens[j].is_content(), dist[j]) {
                    *hist.entry(d).or_default() += 1;
                    total += 1;
                }
            }
        }
    }
    let Some(&max) = hist.keys().next_back() else {
        return BTreeMap::new();
    };
    let mut cdf = BTreeMap::new();
    let mut acc = 0u64;
    for k in 1..=max {
        acc += hist.get(&k).copied().unwrap_or(0);
        cdf.insert(k, acc as f64 / total as f64);
    }
    cdf
}

/// Add synonym edges between nodes that share a synset. Never adds nodes.
pub fn enrich_synonyms(g: &Tfmn, syn: &SynonymLexicon, scope: SynonymScope) -> Tfmn {
    let mut out = g.clone();
    let nodes: Vec<&String> = g.nodes.iter().filter(|n| syn.synsets(n).is_some()).collect();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if !syn.are_synonyms(a, b) {
                continue;
            }
            if scope == SynonymScope::Adjacent && g.edge(a, b).is_none_or(|k| !k.syntactic) {
                continue;
            }
            out.add_kinds(a, b, EdgeKinds::SYNONYM);
        }
    }
    out
}

/// Attach emotion sets and valence to every node.
pub fn tag_nodes(g: &Tfmn, emo: &EmotionLexicon, val: &ValenceLexicon) -> Tfmn {
    let mut out = g.clone();
    out.tags = g
        .nodes
        .iter()
        .map(|n| (n.clone(), NodeTag { valence: val.get(n), emotions: emo.emotions_of(n) }))
        .collect();
    out
}
