//! train stage: feature table, correlation screening and grid-searched
//! cross-validation per target, feature subset and model.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tfmn_core::emotion::EmotionProfile;
use tfmn_core::features::{correlation_screen, feature_code, ColumnKind, Exclusion, FeatureSubset, FeatureTable};
use tfmn_core::metrics::{METRIC_COLUMNS, METRIC_LABELS};
use tfmn_core::ml::{cross_validate, fit, CvReport, EnsembleConfig, Matrix, ModelKind, TrainedEnsemble, TreeNode};
use tfmn_core::ml::{RegressionTree, Selection};
use tfmn_core::MetricVector;

use super::corpus::{demographics, METRICS_JSON, PROFILES_JSON};
use super::Pipeline;
use crate::error::{Error, Result};
use crate::formats::{self, file_safe, num, Csv};
use crate::manifest::{upstream, StageDir};
use crate::runner::Parallel;

pub(super) const TABLE: &str = "table.json";
pub(super) const RUNS: &str = "runs.csv";
pub(super) const TARGET_CORRELATIONS: &str = "target_correlations.csv";
pub(super) const MODEL_FORMAT: &str = "tfmn-model";
pub(super) const MODEL_VERSION: u32 = 1;

/// Versioned model document: configuration, feature schema and nested
/// trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub format: String,
    pub version: u32,
    pub target: String,
    pub subset: String,
    pub features: Vec<String>,
    pub config: EnsembleConfig,
    pub init: f64,
    pub trees: Vec<TreeNode>,
}

impl ModelDoc {
    pub fn new(target: &str, subset: FeatureSubset, features: &[String], m: &TrainedEnsemble) -> ModelDoc {
        ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            target: target.to_string(),
            subset: subset.name().to_string(),
            features: features.to_vec(),
            config: m.config,
            init: m.init,
            trees: m.trees.iter().map(RegressionTree::to_nested).collect(),
        }
    }

    pub fn to_model(&self) -> Result<TrainedEnsemble, String> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(format!("unsupported model document {} v{}", self.format, self.version));
        }
        let n = self.features.len();
        Ok(TrainedEnsemble {
            config: self.config,
            n_features: n,
            init: self.init,
            trees: self.trees.iter().map(|t| RegressionTree::from_nested(t, n, self.config.criterion)).collect(),
        })
    }
}

/// One line of `runs.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunIndexRow {
    pub target: String,
    pub subset: String,
    pub model: String,
    pub dir: String,
    pub seed: u64,
    pub n_features: usize,
    pub pearson_r: f64,
    pub p_value: f64,
    pub mae: f64,
    pub significant: bool,
}

#[derive(Clone, Copy, Debug)]
struct Unit<'a> {
    target: &'a str,
    target_index: usize,
    subset: FeatureSubset,
    model: ModelKind,
    seed: u64,
}

impl Unit<'_> {
    fn dir(&self) -> String {
        format!("runs/{}/{}/{}", file_safe(self.target), self.subset.name(), self.model.name())
    }
}

#[derive(Serialize)]
struct ScreenDoc<'a> {
    target: &'a str,
    subset: &'static str,
    threshold: f64,
    candidates: &'a [String],
    degenerate: Vec<&'a str>,
    groups: Vec<Vec<&'a str>>,
    selected: Vec<&'a str>,
    /// Demographic columns put back after screening.
    forced: Vec<&'a str>,
}

struct UnitOutput {
    index: RunIndexRow,
    files: Vec<(String, Vec<u8>)>,
}

pub(super) fn train(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let metrics_path = upstream(p.output(), "metrics", METRICS_JSON)?;
    let profiles_path = upstream(p.output(), "emotions", PROFILES_JSON)?;
    dir.input_stage("metrics")?;
    dir.input_stage("emotions")?;
    let demo = demographics(p, dir)?;
    let metrics: BTreeMap<String, MetricVector> = formats::read_json(&metrics_path)?;
    let profiles: BTreeMap<String, EmotionProfile> = formats::read_json(&profiles_path)?;
    let cfg = &p.cfg;
    dir.input_file("targets", &cfg.paths.targets)?;
    let targets = formats::read_targets(&cfg.paths.targets)?;
    let names: Vec<String> = if cfg.model.targets.is_empty() { targets.names.clone() } else { cfg.model.targets.clone() };
    let mut columns = Vec::new();
    for n in &names {
        let j = targets.names.iter().position(|t| t == n).ok_or_else(|| {
            Error::stage("train", format!("target {n:?} is not a column of {}", cfg.paths.targets.display()))
        })?;
        columns.push(j);
    }
    let rows: BTreeMap<String, Vec<f64>> =
        targets.rows.iter().map(|(id, v)| (id.clone(), columns.iter().map(|&j| v[j]).collect())).collect();

    let (raw, excluded) = FeatureTable::assemble(&metrics, &profiles, &demo, &names, &rows);
    let mut ex = Csv::new(["transcript_id", "reason"]);
    for e in &excluded {
        let (id, why) = match e {
            Exclusion::MissingTarget(id) => (id, "missing or non-finite target"),
            Exclusion::MissingMetrics(id) => (id, "no network metrics"),
            Exclusion::MissingProfile(id) => (id, "no emotion profile"),
            Exclusion::MissingDemographics(id) => (id, "missing age or sex"),
        };
        ex.row([id.as_str(), why]);
    }
    dir.write("exclusions.csv", ex.into_bytes())?;
    let needed = cfg.model.cv_folds.max(3);
    if raw.n_rows() < needed {
        return Err(Error::stage("train", format!("{} usable transcripts; at least {needed} are needed", raw.n_rows())));
    }
    dir.write("features.csv", table_csv(&raw))?;
    let [lo, hi] = cfg.features.train_range;
    let table = raw.minmax_scale(lo, hi);
    dir.write_json(TABLE, &table)?;
    dir.write("features_scaled.csv", table_csv(&table))?;
    let scaling: Vec<_> = table
        .predictors
        .iter()
        .zip(table.scaling.as_deref().unwrap_or_default())
        .map(|(c, s)| serde_json::json!({ "column": c, "scaling": s }))
        .collect();
    dir.write_json("scaling.json", &scaling)?;

    let thr = cfg.features.correlation_threshold;
    let overview = correlation_screen(&raw, 0, thr).map_err(|e| Error::stage("train", e))?;
    let mut header = vec![String::new()];
    header.extend(raw.predictors.iter().cloned());
    let mut corr = Csv::new(header);
    for (name, row) in raw.predictors.iter().zip(&overview.matrix) {
        let mut r = vec![name.clone()];
        r.extend(row.iter().map(|v| num(*v)));
        corr.row(r);
    }
    dir.write("correlations.csv", corr.into_bytes())?;
    let mut header = vec!["feature".to_string(), "label".to_string(), "code".to_string()];
    header.extend(names.iter().cloned());
    let mut tc = Csv::new(header);
    for (j, row) in overview.target_table().iter().enumerate() {
        let col = &raw.predictors[j];
        let label = METRIC_COLUMNS.iter().position(|c| c == col).map(|i| METRIC_LABELS[i]).unwrap_or(col.as_str());
        let mut r = vec![col.clone(), label.to_string(), feature_code(col).unwrap_or_default()];
        r.extend(row.iter().map(|v| v.map(num).unwrap_or_default()));
        tc.row(r);
    }
    dir.write(TARGET_CORRELATIONS, tc.into_bytes())?;

    let mut units = Vec::new();
    for (t, name) in names.iter().enumerate() {
        for &subset in &cfg.features.subsets {
            for &model in &cfg.model.models {
                units.push(Unit { target: name, target_index: t, subset, model, seed: p.target_seed(name) });
            }
        }
    }
    let outputs: Vec<UnitOutput> = units.par_iter().map(|u| run_unit(p, &table, u)).collect::<Result<_>>()?;
    let mut index = Vec::new();
    for out in outputs {
        for (rel, bytes) in &out.files {
            dir.write(rel, bytes)?;
        }
        index.push(out.index);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &index {
        w.serialize(row).map_err(|e| Error::stage("train", e))?;
    }
    dir.write(RUNS, w.into_inner().map_err(|e| Error::stage("train", e))?)
}

fn table_csv(t: &FeatureTable) -> Vec<u8> {
    let mut header = vec!["transcript_id".to_string()];
    header.extend(t.predictors.iter().cloned());
    header.extend(t.targets.iter().cloned());
    let mut w = Csv::new(header);
    for (i, id) in t.ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(t.x[i].iter().map(|v| num(*v)));
        row.extend(t.y[i].iter().map(|v| num(*v)));
        w.row(row);
    }
    w.into_bytes()
}

/// Column indices of `names` in `t`.
pub(super) fn columns_of(t: &FeatureTable, names: &[String]) -> Result<Vec<usize>, String> {
    names.iter().map(|n| t.predictor_index(n).ok_or_else(|| format!("unknown feature column {n:?}"))).collect()
}

pub(super) fn matrix(t: &FeatureTable, cols: &[usize]) -> Matrix {
    Matrix::from_rows(&t.select(cols).x)
}

fn run_unit(p: &Pipeline, table: &FeatureTable, u: &Unit<'_>) -> Result<UnitOutput> {
    let cfg = &p.cfg;
    let fail = |m: String| Error::stage("train", format!("{} {} {}: {m}", u.target, u.subset.name(), u.model.name()));
    let sub = table.subset(u.subset);
    let screen = correlation_screen(&sub, u.target_index, cfg.features.correlation_threshold)
        .map_err(|e| fail(e.to_string()))?;
    let mut keep = screen.selected.clone();
    let mut forced = Vec::new();
    for (j, kind) in sub.kinds.iter().enumerate() {
        if *kind == ColumnKind::Demographic && !keep.contains(&j) && !screen.degenerate[j] {
            keep.push(j);
            forced.push(j);
        }
    }
    keep.sort_unstable();
    if keep.is_empty() {
        return Err(fail("no usable predictor survives screening".into()));
    }
    let features: Vec<String> = keep.iter().map(|&j| sub.predictors[j].clone()).collect();
    let names = |js: &[usize]| js.iter().map(|&j| sub.predictors[j].as_str()).collect::<Vec<_>>();
    let screen_doc = ScreenDoc {
        target: u.target,
        subset: u.subset.name(),
        threshold: screen.threshold,
        candidates: &sub.predictors,
        degenerate: (0..sub.predictors.len()).filter(|&j| screen.degenerate[j]).map(|j| sub.predictors[j].as_str()).collect(),
        groups: screen.groups.iter().map(|g| names(g)).collect(),
        selected: names(&screen.selected),
        forced: names(&forced),
    };

    let x = matrix(&sub, &keep);
    let y = sub.target(u.target_index);
    let grid = cfg.grid_configs(u.model, u.seed);
    let mut report =
        cross_validate(&x, &y, &features, &grid, cfg.model.cv_folds, u.seed, &Parallel).map_err(|e| fail(e.to_string()))?;
    let all_rows: Vec<usize> = (0..x.rows()).collect();
    let model = fit(&x, &y, &all_rows, &report.config).map_err(|e| fail(e.to_string()))?;

    let base = u.dir();
    let mut files = Vec::new();
    files.push((format!("{base}/screen.json"), formats::json_bytes(&screen_doc).map_err(|e| fail(e.to_string()))?));
    let mut scores = Csv::new(["index", "config", "pearson_r", "p_value", "mae"]);
    for g in &report.grid {
        scores.row([g.index.to_string(), g.config.label(), num(g.pearson_r), num(g.p_value), num(g.mae)]);
    }
    files.push((format!("{base}/grid_scores.csv"), scores.into_bytes()));
    report.grid.clear();
    files.push((format!("{base}/predictions.csv"), predictions_csv(&sub.ids, &report)));
    files.push((format!("{base}/cv_report.json"), formats::json_bytes(&report).map_err(|e| fail(e.to_string()))?));
    files.push((format!("{base}/model.json"), formats::json_bytes(&ModelDoc::new(u.target, u.subset, &features, &model))
                .map_err(|e| fail(e.to_string()))?));

    let index = RunIndexRow {
        target: u.target.to_string(),
        subset: u.subset.name().to_string(),
        model: u.model.name().to_string(),
        dir: base,
        seed: u.seed,
        n_features: features.len(),
        pearson_r: report.pearson_r,
        p_value: report.p_value,
        mae: report.mae,
        significant: report.selection == Selection::Significant,
    };
    Ok(UnitOutput { index, files })
}

pub(super) fn predictions_csv(ids: &[String], r: &CvReport) -> Vec<u8> {
    let mut w = Csv::new(["transcript_id", "fold", "target", "prediction"]);
    for (i, id) in ids.iter().enumerate() {
        w.row([id.clone(), r.folds[i].to_string(), num(r.targets[i]), num(r.predictions[i])]);
    }
    w.into_bytes()
}

pub(super) fn read_runs(p: &Pipeline) -> Result<Vec<RunIndexRow>> {
    let path = upstream(p.output(), "train", RUNS)?;
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| Error::format(&path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| Error::format(&path, e))).collect()
}
