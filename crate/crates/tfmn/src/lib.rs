//! Files, configuration and the staged command-line pipeline around
//! `tfmn-core`.
//!
//! A run reads a directory of CoNLL-U transcripts, an emotion lexicon, an
//! optional synonym list and a CSV of target scores, and writes one
//! directory per stage below the configured output directory:
//!
//! | stage | writes |
//! |---|---|
//! | ingest | normalized corpus, per-transcript summary, demographics, dropped-sentence warnings |
//! | build | per-transcript edge and node lists, graph JSON, distance CDF |
//! | metrics | graph metric table and schema |
//! | emotions | emotion z-score profiles |
//! | train | feature tables, correlations, cross-validated grid search, fitted models |
//! | explain | SHAP values, plot tables, feature elimination, shuffled-target baseline |
//! | report | summary tables |
//!
//! Every stage directory carries a `MANIFEST.json` of content hashes.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod runner;

pub use config::Config;
pub use error::{ConfigError, Error};
pub use pipeline::{Pipeline, Stage};
pub use runner::Parallel;
