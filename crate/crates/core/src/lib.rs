//! Core algorithms for textual forma mentis networks (TFMNs).
//!
//! This crate is `no_std` (with `alloc`): it parses dependency-annotated
//! text, builds word networks from syntactic distances, measures them,
//! profiles their emotional content against a sampling null model, and
//! fits and explains tree-ensemble regressors on the resulting features.
//! File handling, the pipeline and the command line live in the `tfmn`
//! companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod conllu;
pub mod emotion;
pub mod explain;
pub mod features;
pub mod graph;
pub mod lexicon;
pub mod metrics;
pub mod ml;
pub mod rng;
pub mod stats;
pub mod tfmn;

pub use conllu::{parse_conllu, tree_distance, write_conllu, ParseOutcome, SentenceTree, Token, Transcript};
pub use emotion::{count_emotions, null_model, z_scores, EmotionProfile};
pub use features::FeatureTable;
pub use graph::Graph;
pub use lexicon::{Emotion, EmotionLexicon, EmotionSet, Stopwords, SynonymLexicon, Valence};
pub use metrics::MetricVector;
pub use tfmn::{build_syntactic, distance_cdf, enrich_synonyms, tag_nodes, Tfmn};
