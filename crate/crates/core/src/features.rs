//! Per-transcript feature tables: assembly, min-max scaling and Pearson
//! correlation screening.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::conllu::Demographics;
use crate::emotion::EmotionProfile;
use crate::lexicon::Emotion;
use crate::metrics::{MetricVector, METRIC_COLUMNS};
use crate::stats::{pearson, Correlation};

/// Default `|r|` threshold for correlation screening.
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Network,
    Emotion,
    Demographic,
}

/// Which predictor families a model sees. Demographics are always kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    #[default]
    Combined,
    Network,
    Emotion,
}

impl FeatureSubset {
    pub const ALL: [FeatureSubset; 3] = [FeatureSubset::Combined, FeatureSubset::Network, FeatureSubset::Emotion];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSubset::Combined => "combined",
            FeatureSubset::Network => "network",
            FeatureSubset::Emotion => "emotion",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureSubset> {
        FeatureSubset::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn includes(self, kind: ColumnKind) -> bool {
        match (self, kind) {
            (_, ColumnKind::Demographic) | (FeatureSubset::Combined, _) => true,
            (FeatureSubset::Network, k) => k == ColumnKind::Network,
            (FeatureSubset::Emotion, k) => k == ColumnKind::Emotion,
        }
    }
}

/// Min-max parameters of one column.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ColumnScaling {
    pub min: f64,
    pub max: f64,
    pub lo: f64,
    pub hi: f64,
    /// `max == min`; the column was mapped to the range midpoint.
    pub constant: bool,
}

impl ColumnScaling {
    pub fn apply(&self, x: f64) -> f64 {
        if self.constant {
            0.5 * (self.lo + self.hi)
        } else {
            self.lo + (self.hi - self.lo) * (x - self.min) / (self.max - self.min)
        }
    }

    pub fn invert(&self, x: f64) -> f64 {
        if self.constant {
            self.min
        } else {
            self.min + (x - self.lo) * (self.max - self.min) / (self.hi - self.lo)
        }
    }
}

/// Why a transcript was left out of the table.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Exclusion {
    MissingTarget(String),
    MissingMetrics(String),
    MissingProfile(String),
    MissingDemographics(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureError {
    TooFewRows(usize),
    UnknownTarget(String),
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::TooFewRows(n) => write!(f, "correlation screening needs at least 3 rows, got {n}"),
            FeatureError::UnknownTarget(t) => write!(f, "unknown target column {t:?}"),
        }
    }
}

impl core::error::Error for FeatureError {}

/// Rows of predictors and targets keyed by transcript id.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub predictors: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    /// Row-major predictor values.
    pub x: Vec<Vec<f64>>,
    pub targets: Vec<String>,
    /// Row-major target values.
    pub y: Vec<Vec<f64>>,
    /// Present once the predictors have been min-max scaled.
    pub scaling: Option<Vec<ColumnScaling>>,
}

/// Names of the emotion columns, `z_<emotion>`.
pub fn emotion_column(e: Emotion) -> String {
    alloc::format!("z_{}", e.name())
}

/// Predictor columns of a combined table, in order.
pub fn combined_columns() -> Vec<(String, ColumnKind)> {
    let mut cols: Vec<(String, ColumnKind)> =
        METRIC_COLUMNS.iter().map(|c| (c.to_string(), ColumnKind::Network)).collect();
    cols.extend(Emotion::ALL.iter().map(|e| (emotion_column(*e), ColumnKind::Emotion)));
    cols.push(("age".to_string(), ColumnKind::Demographic));
    cols.push(("sex".to_string(), ColumnKind::Demographic));
    cols
}

/// Short table code of a predictor column, if it has one: digits for the
/// frequently selected network features and age, the emotion letter for
/// emotion columns.
pub fn feature_code(column: &str) -> Option<String> {
    if let Some(c) = crate::metrics::feature_code(column) {
        return Some(c.to_string());
    }
    let e = Emotion::from_name(column.strip_prefix("z_")?)?;
    Some(e.code().to_string())
}

impl FeatureTable {
    /// Inner join of the four sources on transcript id. Transcripts lacking
    /// any input, or with a non-finite target, are excluded and reported.
    pub fn assemble(
        metrics: &BTreeMap<String, MetricVector>,
        profiles: &BTreeMap<String, EmotionProfile>,
        demographics: &BTreeMap<String, Demographics>,
        target_names: &[String],
        targets: &BTreeMap<String, Vec<f64>>,
    ) -> (FeatureTable, Vec<Exclusion>) {
        let cols = combined_columns();
        let mut table = FeatureTable {
            ids: Vec::new(),
            predictors: cols.iter().map(|c| c.0.clone()).collect(),
            kinds: cols.iter().map(|c| c.1).collect(),
            x: Vec::new(),
            targets: target_names.to_vec(),
            y: Vec::new(),
            scaling: None,
        };
        let mut excluded = Vec::new();
        let ids: BTreeSet<&String> = metrics.keys().chain(profiles.keys()).chain(targets.keys()).collect();
        for id in ids {
            let Some(mv) = metrics.get(id) else {
                excluded.push(Exclusion::MissingMetrics(id.clone()));
                continue;
            };
            let Some(profile) = profiles.get(id) else {
                excluded.push(Exclusion::MissingProfile(id.clone()));
                continue;
            };
            let target = targets.get(id).filter(|t| t.len() == target_names.len() && t.iter().all(|v| v.is_finite()));
            let Some(target) = target else {
                excluded.push(Exclusion::MissingTarget(id.clone()));
                continue;
            };
            let demo = demographics.get(id);
            let (Some(age), Some(sex)) = (demo.and_then(|d| d.age), demo.and_then(|d| d.sex)) else {
                excluded.push(Exclusion::MissingDemographics(id.clone()));
                continue;
            };
            let mut row: Vec<f64> = mv.values().to_vec();
            row.extend(Emotion::ALL.iter().map(|e| profile.z_scores[*e]));
            row.push(age);
            row.push(f64::from(sex));
            table.ids.push(id.clone());
            table.x.push(row);
            table.y.push(target.clone());
        }
        (table, excluded)
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().map(|r| r[j]).collect()
    }

    pub fn target(&self, t: usize) -> Vec<f64> {
        self.y.iter().map(|r| r[t]).collect()
    }

    pub fn target_index(&self, name: &str) -> Result<usize, FeatureError> {
        self.targets.iter().position(|t| t == name).ok_or_else(|| FeatureError::UnknownTarget(name.to_string()))
    }

    pub fn predictor_index(&self, name: &str) -> Option<usize> {
        self.predictors.iter().position(|p| p == name)
    }

    /// Keep only the given predictor columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: self.ids.clone(),
            predictors: columns.iter().map(|&j| self.predictors[j].clone()).collect(),
            kinds: columns.iter().map(|&j| self.kinds[j]).collect(),
            x: self.x.iter().map(|r| columns.iter().map(|&j| r[j]).collect()).collect(),
            targets: self.targets.clone(),
            y: self.y.clone(),
            scaling: self.scaling.as_ref().map(|s| columns.iter().map(|&j| s[j]).collect()),
        }
    }

    /// Restrict to one predictor family (plus demographics).
    pub fn subset(&self, subset: FeatureSubset) -> FeatureTable {
        let cols: Vec<usize> = (0..self.predictors.len()).filter(|&j| subset.includes(self.kinds[j])).collect();
        self.select(&cols)
    }

    /// Map every predictor column to `[lo, hi]` by
    /// `lo + (hi - lo)(x - min)/(max - min)`.
    pub fn minmax_scale(&self, lo: f64, hi: f64) -> FeatureTable {
        let raw = self.unscaled();
        let scaling: Vec<ColumnScaling> = (0..raw.predictors.len())
            .map(|j| {
                let col = raw.column(j);
                let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                ColumnScaling { min, max, lo, hi, constant: max.is_nan() || min.is_nan() || max <= min }
            })
            .collect();
        let x = raw.x.iter().map(|r| r.iter().zip(&scaling).map(|(v, s)| s.apply(*v)).collect()).collect();
        FeatureTable { x, scaling: Some(scaling), ..raw }
    }

    /// Undo scaling, if any.
    pub fn unscaled(&self) -> FeatureTable {
        match &self.scaling {
            None => self.clone(),
            Some(s) => FeatureTable {
                x: self.x.iter().map(|r| r.iter().zip(s).map(|(v, c)| c.invert(*v)).collect()).collect(),
                scaling: None,
                ..self.clone()
            },
        }
    }
}

/// Output of [`correlation_screen`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Screen {
    pub threshold: f64,
    /// Predictor-by-predictor Pearson r.
    pub matrix: Vec<Vec<f64>>,
    /// Predictor-by-target correlation tests.
    pub target_r: Vec<Vec<Correlation>>,
    /// Zero-variance predictors (never selected).
    pub degenerate: Vec<bool>,
    /// Groups of predictors linked by `|r| > threshold`, each sorted.
    pub groups: Vec<Vec<usize>>,
    /// One representative per group, in column order.
    pub selected: Vec<usize>,
}

impl Screen {
    /// Feature-target r with `|r| <= threshold` blanked.
    pub fn target_table(&self) -> Vec<Vec<Option<f64>>> {
        self.target_r
            .iter()
            .map(|row| row.iter().map(|c| (libm::fabs(c.r) > self.threshold).then_some(c.r)).collect())
            .collect()
    }
}

/// Pearson screening for one target. Predictors are grouped as the
/// connected components of the `|r| > threshold` graph; each group keeps
/// the member with the largest `|r|` against `target` (ties go to the
/// earlier column).
pub fn correlation_screen(t: &FeatureTable, target: usize, threshold: f64) -> Result<Screen, FeatureError> {
    let n = t.n_rows();
    if n < 3 {
        return Err(FeatureError::TooFewRows(n));
    }
    let p = t.predictors.len();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| t.column(j)).collect();
    let targets: Vec<Vec<f64>> = (0..t.targets.len()).map(|k| t.target(k)).collect();
    let mut matrix = vec![vec![0.0; p]; p];
    let mut degenerate = vec![false; p];
    for i in 0..p {
        for j in i..p {
            let c = pearson(&cols[i], &cols[j]);
            if i == j {
                degenerate[i] = c.degenerate;
                matrix[i][i] = if c.degenerate { 0.0 } else { 1.0 };
            } else {
                matrix[i][j] = c.r;
                matrix[j][i] = c.r;
            }
        }
    }
    let target_r: Vec<Vec<Correlation>> =
        cols.iter().map(|c| targets.iter().map(|y| pearson(c, y)).collect()).collect();

    let mut group_of = vec![usize::MAX; p];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for s in 0..p {
        if group_of[s] != usize::MAX || degenerate[s] {
            continue;
        }
        let gid = groups.len();
        let mut members = vec![s];
        group_of[s] = gid;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in 0..p {
                if group_of[v] == usize::MAX && !degenerate[v] && libm::fabs(matrix[u][v]) > threshold {
                    group_of[v] = gid;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    let mut selected: Vec<usize> = groups
        .iter()
        .map(|g| {
            let mut best = g[0];
            for &j in &g[1..] {
                if libm::fabs(target_r[j][target].r) > libm::fabs(target_r[best][target].r) {
                    best = j;
                }
            }
            best
        })
        .collect();
    selected.sort_unstable();
    Ok(Screen { threshold, matrix, target_r, degenerate, groups, selected })
}
