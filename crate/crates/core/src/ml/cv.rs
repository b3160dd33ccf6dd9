//! Grid-searched k-fold cross-validation and target-permutation baselines.

use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::ensemble::{fit, EnsembleConfig};
use super::{Matrix, MlError};
use crate::rng::{derive, rng_for};
use crate::stats::{mean_absolute_error, pearson};

/// Configurations are only preferred when their pooled p-value is below this.
pub const SIGNIFICANCE_ALPHA: f64 = 0.05;

const FOLD_STREAM: u64 = 0x666f_6c64;
const PERMUTATION_STREAM: u64 = 0x7065_726d_0000_0000;

/// Fold index of every row: the rows are shuffled with `seed` and cut into
/// `k` contiguous blocks, the first `n % k` blocks one row longer.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, FOLD_STREAM));
    let mut folds = alloc::vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut pos = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        for &row in &order[pos..pos + len] {
            folds[row] = f;
        }
        pos += len;
    }
    folds
}

/// Random permutation of `0..n`, or the identity when `seed` is `None`.
pub fn permutation(n: usize, seed: Option<u64>) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    if let Some(s) = seed {
        p.shuffle(&mut rng_for(s, PERMUTATION_STREAM));
    }
    p
}

pub fn permute(values: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&i| values[i]).collect()
}

/// Grid configurations that differ only in `n_estimators`. One ensemble
/// with the largest count is fit and every smaller count is read off its
/// prefix, which equals an independent fit because trees and boosting
/// stages draw from per-index seed streams.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGroup {
    pub config: EnsembleConfig,
    /// Ascending estimator counts.
    pub n_estimators: Vec<usize>,
    /// Grid index for each entry of `n_estimators`.
    pub members: Vec<usize>,
}

pub fn grid_groups(grid: &[EnsembleConfig]) -> Vec<GridGroup> {
    let mut groups: Vec<GridGroup> = Vec::new();
    for (idx, cfg) in grid.iter().enumerate() {
        let key = EnsembleConfig { n_estimators: 0, ..*cfg };
        let found = groups.iter_mut().find(|g| EnsembleConfig { n_estimators: 0, ..g.config } == key);
        match found {
            Some(g) => {
                g.n_estimators.push(cfg.n_estimators);
                g.members.push(idx);
                if cfg.n_estimators > g.config.n_estimators {
                    g.config.n_estimators = cfg.n_estimators;
                }
            }
            None => groups.push(GridGroup { config: *cfg, n_estimators: alloc::vec![cfg.n_estimators], members: alloc::vec![idx] }),
        }
    }
    for g in &mut groups {
        let mut pairs: Vec<(usize, usize)> = g.n_estimators.iter().copied().zip(g.members.iter().copied()).collect();
        pairs.sort_unstable();
        g.n_estimators = pairs.iter().map(|p| p.0).collect();
        g.members = pairs.iter().map(|p| p.1).collect();
    }
    groups
}

/// Pooled out-of-fold outcome of one grid configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub index: usize,
    pub predictions: Vec<f64>,
    pub pearson_r: f64,
    pub p_value: f64,
    pub degenerate: bool,
    pub mae: f64,
}

/// Everything needed to evaluate a grid, split into independent groups.
pub struct CvPlan<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    grid: &'a [EnsembleConfig],
    k: usize,
    seed: u64,
    folds: Vec<usize>,
    groups: Vec<GridGroup>,
}

impl<'a> CvPlan<'a> {
    pub fn new(x: &'a Matrix, y: &'a [f64], grid: &'a [EnsembleConfig], k: usize, seed: u64) -> Result<Self, MlError> {
        if grid.is_empty() {
            return Err(MlError::EmptyGrid);
        }
        if k < 2 {
            return Err(MlError::InvalidConfig("k must be at least 2".into()));
        }
        if y.len() != x.rows() {
            return Err(MlError::ShapeMismatch { expected: x.rows(), found: y.len() });
        }
        if x.rows() < 2 * k {
            return Err(MlError::TooFewRows { rows: x.rows(), needed: 2 * k });
        }
        if x.cols() == 0 {
            return Err(MlError::NoFeatures);
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(MlError::NonFinite);
        }
        for c in grid {
            c.validate()?;
        }
        Ok(CvPlan { x, y, grid, k, seed, folds: fold_assignment(x.rows(), k, seed), groups: grid_groups(grid) })
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn folds(&self) -> &[usize] {
        &self.folds
    }

    /// Fits group `g` on every training split and scores its members.
    pub fn evaluate(&self, g: usize) -> Result<Vec<Evaluation>, MlError> {
        let group = &self.groups[g];
        let n = self.x.rows();
        let mut preds: Vec<Vec<f64>> = alloc::vec![alloc::vec![0.0; n]; group.n_estimators.len()];
        for f in 0..self.k {
            let train: Vec<usize> = (0..n).filter(|&i| self.folds[i] != f).collect();
            let model = fit(self.x, self.y, &train, &group.config)?;
            for i in (0..n).filter(|&i| self.folds[i] == f) {
                for (m, p) in model.staged_predict(self.x.row(i), &group.n_estimators).into_iter().enumerate() {
                    preds[m][i] = p;
                }
            }
        }
        Ok(preds
            .into_iter()
            .zip(&group.members)
            .map(|(predictions, &index)| {
                let c = pearson(self.y, &predictions);
                let mae = mean_absolute_error(self.y, &predictions);
                Evaluation { index, predictions, pearson_r: c.r, p_value: c.p_value, degenerate: c.degenerate, mae }
            })
            .collect())
    }

    /// Picks the best configuration from per-group results and builds the
    /// report.
    pub fn finish(&self, results: Vec<Result<Vec<Evaluation>, MlError>>, features: &[String]) -> Result<CvReport, MlError> {
        let mut evals: Vec<Evaluation> = Vec::with_capacity(self.grid.len());
        for r in results {
            evals.extend(r?);
        }
        evals.sort_by_key(|e| e.index);
        let significant = |e: &Evaluation| !e.degenerate && e.p_value < SIGNIFICANCE_ALPHA;
        let better = |a: &Evaluation, b: &Evaluation| {
            let (ra, rb) = (libm::fabs(a.pearson_r), libm::fabs(b.pearson_r));
            ra > rb || (ra == rb && a.mae < b.mae)
        };
        let mut best: Option<usize> = None;
        let mut selection = Selection::Significant;
        for pass in [true, false] {
            for (i, e) in evals.iter().enumerate() {
                if pass && !significant(e) {
                    continue;
                }
                if best.is_none_or(|b| better(e, &evals[b])) {
                    best = Some(i);
                }
            }
            if best.is_some() {
                break;
            }
            selection = Selection::NoneSignificant;
        }
        let best = best.ok_or(MlError::EmptyGrid)?;
        let grid_scores = evals
            .iter()
            .map(|e| GridScore {
                index: e.index,
                config: self.grid[e.index],
                pearson_r: e.pearson_r,
                p_value: e.p_value,
                mae: e.mae,
            })
            .collect();
        let chosen = evals.swap_remove(best);
        let fold_results = (0..self.k)
            .map(|f| {
                let rows: Vec<usize> = (0..self.folds.len()).filter(|&i| self.folds[i] == f).collect();
                let truth: Vec<f64> = rows.iter().map(|&i| self.y[i]).collect();
                let predictions: Vec<f64> = rows.iter().map(|&i| chosen.predictions[i]).collect();
                FoldResult {
                    fold: f,
                    pearson_r: pearson(&truth, &predictions).r,
                    mae: mean_absolute_error(&truth, &predictions),
                    rows,
                    predictions,
                }
            })
            .collect();
        Ok(CvReport {
            config: self.grid[chosen.index],
            config_index: chosen.index,
            features: features.to_vec(),
            k: self.k,
            seed: self.seed,
            folds: self.folds.clone(),
            targets: self.y.to_vec(),
            predictions: chosen.predictions,
            fold_results,
            pearson_r: chosen.pearson_r,
            p_value: chosen.p_value,
            degenerate: chosen.degenerate,
            mae: chosen.mae,
            selection,
            grid: grid_scores,
        })
    }
}

/// Strategy for evaluating the groups of a [`CvPlan`]. Implementations
/// must return one entry per group, in group order.
pub trait GridRunner {
    fn run(&self, plan: &CvPlan<'_>) -> Vec<Result<Vec<Evaluation>, MlError>>;
}

/// Evaluates groups one after another.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl GridRunner for Sequential {
    fn run(&self, plan: &CvPlan<'_>) -> Vec<Result<Vec<Evaluation>, MlError>> {
        (0..plan.n_groups()).map(|g| plan.evaluate(g)).collect()
    }
}

/// How the reported configuration was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Largest |r| among configurations with p below the threshold, then lowest MAE.
    Significant,
    /// No configuration reached significance; largest |r| overall.
    NoneSignificant,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridScore {
    pub index: usize,
    pub config: EnsembleConfig,
    pub pearson_r: f64,
    pub p_value: f64,
    pub mae: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub rows: Vec<usize>,
    pub predictions: Vec<f64>,
    pub pearson_r: f64,
    pub mae: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CvReport {
    pub config: EnsembleConfig,
    pub config_index: usize,
    pub features: Vec<String>,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<usize>,
    pub targets: Vec<f64>,
    /// Pooled out-of-fold prediction for every row.
    pub predictions: Vec<f64>,
    pub fold_results: Vec<FoldResult>,
    pub pearson_r: f64,
    pub p_value: f64,
    pub degenerate: bool,
    pub mae: f64,
    pub selection: Selection,
    pub grid: Vec<GridScore>,
}

impl CvReport {
    pub fn is_significant(&self) -> bool {
        !self.degenerate && self.p_value < SIGNIFICANCE_ALPHA
    }
}

/// Runs the grid over `k` seeded folds and reports the selected
/// configuration. `features` names the columns of `x`.
pub fn cross_validate(
    x: &Matrix,
    y: &[f64],
    features: &[String],
    grid: &[EnsembleConfig],
    k: usize,
    seed: u64,
    runner: &impl GridRunner,
) -> Result<CvReport, MlError> {
    if features.len() != x.cols() {
        return Err(MlError::SchemaMismatch { expected: x.cols(), found: features.len() });
    }
    let plan = CvPlan::new(x, y, grid, k, seed)?;
    let results = runner.run(&plan);
    plan.finish(results, features)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PermutationRun {
    pub repetition: usize,
    pub shuffle_seed: u64,
    pub report: CvReport,
}

/// Repeats cross-validation with the targets shuffled, once per
/// repetition, keeping predictors and folds fixed.
#[allow(clippy::too_many_arguments)]
pub fn permutation_baseline(
    x: &Matrix,
    y: &[f64],
    features: &[String],
    grid: &[EnsembleConfig],
    k: usize,
    seed: u64,
    n_perm: usize,
    runner: &impl GridRunner,
) -> Result<Vec<PermutationRun>, MlError> {
    if n_perm == 0 {
        return Err(MlError::InvalidConfig("at least one permutation is required".into()));
    }
    (0..n_perm).map(|rep| permutation_run(x, y, features, grid, k, seed, rep, runner)).collect()
}

/// One repetition of [`permutation_baseline`]. Repetitions are independent,
/// so callers may run them in any order.
#[allow(clippy::too_many_arguments)]
pub fn permutation_run(
    x: &Matrix,
    y: &[f64],
    features: &[String],
    grid: &[EnsembleConfig],
    k: usize,
    seed: u64,
    repetition: usize,
    runner: &impl GridRunner,
) -> Result<PermutationRun, MlError> {
    let shuffle_seed = derive(seed, PERMUTATION_STREAM + repetition as u64);
    let shuffled = permute(y, &permutation(y.len(), Some(shuffle_seed)));
    let report = cross_validate(x, &shuffled, features, grid, k, seed, runner)?;
    Ok(PermutationRun { repetition, shuffle_seed, report })
}
