//! The staged pipeline. Each stage reads the previous stages' artifacts
//! from the output directory and writes its own directory plus manifest.

mod corpus;
mod explain;
mod report;
mod train;

use std::path::{Path, PathBuf};

use tfmn_core::rng::{derive, hash_str};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::manifest::{sha256_hex, StageDir, StageManifest};

pub use corpus::cdf_table;
pub use explain::PermutationSummary;
pub use report::{ReportRow, Tables};
pub use train::{ModelDoc, RunIndexRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Stage {
    Ingest,
    Build,
    Metrics,
    Emotions,
    Train,
    Explain,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Ingest, Stage::Build, Stage::Metrics, Stage::Emotions, Stage::Train, Stage::Explain, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Build => "build",
            Stage::Metrics => "metrics",
            Stage::Emotions => "emotions",
            Stage::Train => "train",
            Stage::Explain => "explain",
            Stage::Report => "report",
        }
    }

    fn later(self) -> Vec<&'static str> {
        Stage::ALL.iter().filter(|s| **s > self).map(|s| s.name()).collect()
    }
}

pub struct Pipeline {
    cfg: Config,
    settings: String,
}

impl Pipeline {
    pub fn new(cfg: Config) -> Pipeline {
        let settings = sha256_hex(cfg.fingerprint().as_bytes());
        Pipeline { cfg, settings }
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn output(&self) -> &Path {
        &self.cfg.paths.output
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.output().join(stage.name())
    }

    /// Every stage in order, stopping at the first failure.
    pub fn run_all(&self) -> Result<Vec<StageManifest>> {
        Stage::ALL.iter().map(|s| self.run(*s)).collect()
    }

    pub fn run(&self, stage: Stage) -> Result<StageManifest> {
        std::fs::create_dir_all(self.output()).map_err(|e| Error::io(self.output(), e))?;
        let mut dir = StageDir::open(self.output(), stage.name())?;
        let outcome = match stage {
            Stage::Ingest => corpus::ingest(self, &mut dir),
            Stage::Build => corpus::build(self, &mut dir),
            Stage::Metrics => corpus::metrics(self, &mut dir),
            Stage::Emotions => corpus::emotions(self, &mut dir),
            Stage::Train => train::train(self, &mut dir),
            Stage::Explain => explain::explain(self, &mut dir),
            Stage::Report => report::report(self, &mut dir),
        };
        // Partial artifacts stay on disk for inspection; without a manifest
        // no later stage will accept them.
        match outcome {
            Ok(()) => dir.finish(&self.settings, &stage.later()),
            Err(e @ (Error::MissingUpstreamArtifact { .. } | Error::Config(_))) => Err(e),
            Err(e) => Err(Error::Failed { stage: stage.name(), source: Box::new(e) }),
        }
    }

    /// Seed of everything modelled for one target: fold assignment, model
    /// randomness, shuffles. Every feature subset and model of a target
    /// shares folds.
    fn target_seed(&self, target: &str) -> u64 {
        derive(self.cfg.seed, hash_str(target))
    }
}
