//! Pipeline configuration: a TOML document with every default pre-filled,
//! plus `TFMN_<SECTION>__<KEY>` environment overrides.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tfmn_core::emotion::{Sampling, MIN_SAMPLES};
use tfmn_core::features::{FeatureSubset, DEFAULT_CORRELATION_THRESHOLD};
use tfmn_core::metrics::CommunityMethod;
use tfmn_core::ml::{Criterion, EnsembleConfig, Grid, Loss, MaxFeatures, ModelKind};
use tfmn_core::tfmn::{SynonymScope, DEFAULT_K};

use crate::error::ConfigError;

/// Prefix of environment variables that override config keys. A double
/// underscore separates the section from the key.
pub const ENV_PREFIX: &str = "TFMN_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub network: NetworkSettings,
    #[serde(default)]
    pub emotion: EmotionSettings,
    #[serde(default)]
    pub features: FeatureSettings,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default)]
    pub grid: GridSettings,
}

/// Input and output locations. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Directory of `*.conllu` files.
    pub corpus: PathBuf,
    /// `word<TAB>category<TAB>0|1` rows (eight emotions plus polarity).
    pub emotion_lexicon: PathBuf,
    /// `word<TAB>synset` rows. Without it no synonym edges are added.
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    /// One lemma per line; the bundled English list when absent.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// CSV with a `transcript_id` column and one column per target score.
    pub targets: PathBuf,
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSettings {
    /// Maximum dependency-tree distance linking two words.
    pub k: usize,
    pub synonym_scope: SynonymScope,
    /// Count synonym-only edges when computing graph metrics.
    pub synonym_edges_in_metrics: bool,
    pub community: CommunityMethod,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        NetworkSettings {
            k: DEFAULT_K,
            synonym_scope: SynonymScope::Present,
            synonym_edges_in_metrics: true,
            community: CommunityMethod::Greedy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmotionSettings {
    /// Null-model draws per transcript.
    pub samples: usize,
    pub sampling: Sampling,
}

impl Default for EmotionSettings {
    fn default() -> Self {
        EmotionSettings { samples: tfmn_core::emotion::DEFAULT_SAMPLES, sampling: Sampling::WithoutReplacement }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// Pairwise |r| above which predictors are grouped during screening.
    pub correlation_threshold: f64,
    /// Min-max range for model inputs.
    pub train_range: [f64; 2],
    /// Min-max range for the values shown next to SHAP values.
    pub shap_range: [f64; 2],
    #[serde(serialize_with = "subsets_ser", deserialize_with = "subsets_de")]
    pub subsets: Vec<FeatureSubset>,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
            train_range: [0.0, 1.0],
            shap_range: [-5.0, 5.0],
            subsets: FeatureSubset::ALL.to_vec(),
        }
    }
}

fn subsets_ser<S: Serializer>(v: &[FeatureSubset], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|f| f.name()))
}

fn subsets_de<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<FeatureSubset>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| FeatureSubset::parse(s).ok_or_else(|| D::Error::custom(format!("unknown feature subset {s:?}"))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// Target columns to model; every column of the targets file when empty.
    pub targets: Vec<String>,
    pub models: Vec<ModelKind>,
    pub cv_folds: usize,
    /// Shuffled-target repetitions for the permutation baseline.
    pub n_perm: usize,
    /// Largest drop in pooled r for which a feature is eliminated.
    pub delta: f64,
    /// Shuffles per feature during elimination.
    pub n_shuffles: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            targets: Vec::new(),
            models: vec![ModelKind::Rfr, ModelKind::Gbm],
            cv_folds: 4,
            n_perm: 10,
            delta: 0.01,
            n_shuffles: 1,
        }
    }
}

/// An integer bound or `"none"` for unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limit(pub Option<usize>);

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(n) => s.serialize_u64(n as u64),
            None => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Limit(Some(n))),
            Raw::S(s) if s == "none" => Ok(Limit(None)),
            Raw::S(s) => Err(D::Error::custom(format!("expected an integer or \"none\", got {s:?}"))),
        }
    }
}

/// Hyperparameter axes. Unset axes take the published grid's values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_estimators: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<Vec<Limit>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_features: Option<Vec<MaxFeatures>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<Vec<Loss>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_leaf_nodes: Option<Vec<Limit>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<Vec<Criterion>>,
}

impl GridSpec {
    pub fn to_grid(&self, kind: ModelKind) -> Grid {
        let mut g = match kind {
            ModelKind::Rfr => Grid::paper_rfr(),
            ModelKind::Gbm => Grid::paper_gbm(),
        };
        let limits = |v: &Vec<Limit>| v.iter().map(|l| l.0).collect::<Vec<_>>();
        if let Some(v) = &self.n_estimators {
            g.n_estimators = v.clone();
        }
        if let Some(v) = &self.learning_rate {
            g.learning_rate = v.clone();
        }
        if let Some(v) = &self.max_depth {
            g.max_depth = limits(v);
        }
        if let Some(v) = &self.max_features {
            g.max_features = v.clone();
        }
        if let Some(v) = &self.subsample {
            g.subsample = v.clone();
        }
        if let Some(v) = &self.loss {
            g.loss = v.clone();
        }
        if let Some(v) = &self.max_leaf_nodes {
            g.max_leaf_nodes = limits(v);
        }
        if let Some(v) = &self.criterion {
            g.criterion = v.clone();
        }
        g
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub rfr: GridSpec,
    pub gbm: GridSpec,
}

impl GridSettings {
    pub fn grid(&self, kind: ModelKind) -> Grid {
        match kind {
            ModelKind::Rfr => self.rfr.to_grid(kind),
            ModelKind::Gbm => self.gbm.to_grid(kind),
        }
    }
}

impl Config {
    /// Read, apply overrides from `env` (pairs of variable name and value;
    /// only `TFMN_`-prefixed names are considered), resolve paths and
    /// validate.
    pub fn load<I>(path: &Path, env: I) -> Result<Config, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut doc: toml::Table =
            text.parse().map_err(|e: toml::de::Error| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        let mut overrides: Vec<(String, String)> =
            env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (var, raw) in overrides {
            apply_override(&mut doc, &var, &raw)?;
        }
        let mut cfg: Config = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse { path: path.to_path_buf(), message: e.message().to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// [`Config::load`] with the process environment.
    pub fn load_with_process_env(path: &Path) -> Result<Config, ConfigError> {
        Config::load(path, std::env::vars())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.paths;
        require_dir("paths.corpus", &p.corpus)?;
        require_file("paths.emotion_lexicon", &p.emotion_lexicon)?;
        require_file("paths.targets", &p.targets)?;
        if let Some(s) = &p.synonyms {
            require_file("paths.synonyms", s)?;
        }
        if let Some(s) = &p.stopwords {
            require_file("paths.stopwords", s)?;
        }
        if self.network.k == 0 {
            return Err(ConfigError::invalid("network.k", "must be at least 1"));
        }
        if self.emotion.samples < MIN_SAMPLES {
            return Err(ConfigError::invalid("emotion.samples", format!("must be at least {MIN_SAMPLES}")));
        }
        let f = &self.features;
        if !(0.0..1.0).contains(&f.correlation_threshold) {
            return Err(ConfigError::invalid("features.correlation_threshold", "must lie in [0, 1)"));
        }
        for (field, [lo, hi]) in [("features.train_range", f.train_range), ("features.shap_range", f.shap_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ConfigError::invalid(field, "needs finite lo < hi"));
            }
        }
        if f.subsets.is_empty() {
            return Err(ConfigError::invalid("features.subsets", "at least one subset is required"));
        }
        let m = &self.model;
        if m.models.is_empty() {
            return Err(ConfigError::invalid("model.models", "at least one model is required"));
        }
        if m.cv_folds < 2 {
            return Err(ConfigError::invalid("model.cv_folds", "must be at least 2"));
        }
        if !(m.delta.is_finite() && m.delta >= 0.0) {
            return Err(ConfigError::invalid("model.delta", "must be a finite value >= 0"));
        }
        if m.n_shuffles == 0 {
            return Err(ConfigError::invalid("model.n_shuffles", "must be at least 1"));
        }
        for kind in [ModelKind::Rfr, ModelKind::Gbm] {
            let field = format!("grid.{}", kind.name());
            let configs = self.grid.grid(kind).configs(self.seed);
            if configs.is_empty() {
                return Err(ConfigError::invalid(&field, "grid is empty"));
            }
            if let Some(e) = configs.iter().find_map(|c| c.validate().err()) {
                return Err(ConfigError::invalid(&field, e.to_string()));
            }
        }
        Ok(())
    }

    pub fn grid_configs(&self, kind: ModelKind, seed: u64) -> Vec<EnsembleConfig> {
        self.grid.grid(kind).configs(seed)
    }

    /// Settings that shape results, without any filesystem locations. Their
    /// hash goes into every stage manifest, so moving the output directory
    /// leaves manifests unchanged.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Settings<'a> {
            seed: u64,
            network: &'a NetworkSettings,
            emotion: &'a EmotionSettings,
            features: &'a FeatureSettings,
            model: &'a ModelSettings,
            rfr: Grid,
            gbm: Grid,
        }
        serde_json::to_string(&Settings {
            seed: self.seed,
            network: &self.network,
            emotion: &self.emotion,
            features: &self.features,
            model: &self.model,
            rfr: self.grid.grid(ModelKind::Rfr),
            gbm: self.grid.grid(ModelKind::Gbm),
        })
        .expect("settings serialize")
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.corpus);
        abs(&mut self.emotion_lexicon);
        abs(&mut self.targets);
        abs(&mut self.output);
        if let Some(p) = &mut self.synonyms {
            abs(p);
        }
        if let Some(p) = &mut self.stopwords {
            abs(p);
        }
    }
}

fn require_file(field: &str, p: &Path) -> Result<(), ConfigError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(ConfigError::MissingPath { field: field.to_string(), path: p.to_path_buf() })
    }
}

fn require_dir(field: &str, p: &Path) -> Result<(), ConfigError> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(ConfigError::MissingPath { field: field.to_string(), path: p.to_path_buf() })
    }
}

/// `TFMN_NETWORK__K=3` sets `network.k`; `TFMN_SEED=7` sets the top-level
/// seed. Values are read as TOML, falling back to a bare string.
fn apply_override(doc: &mut toml::Table, var: &str, raw: &str) -> Result<(), ConfigError> {
    let err = |message: &str| ConfigError::Override { var: var.to_string(), message: message.to_string() };
    let key = var[ENV_PREFIX.len()..].to_ascii_lowercase();
    let parts: Vec<&str> = key.split("__").collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err("empty key segment"));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, sections) = parts.split_last().expect("non-empty key");
    let mut table = doc;
    for s in sections {
        let entry = table.entry(s.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| err("key path crosses a non-table value"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
