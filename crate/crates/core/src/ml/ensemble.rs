use alloc::format;
use alloc::vec::Vec;

use super::tree::{fit_tree, Criterion, MaxFeatures, RegressionTree, TreeParams};
use super::{Matrix, MlError};
use crate::rng::rng_for;
use crate::stats::median;
use rand::Rng as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rfr,
    Gbm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rfr => "rfr",
            ModelKind::Gbm => "gbm",
        }
    }
}

/// Boosting loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    #[serde(alias = "squared_error")]
    Squared,
    /// Trees are fit to the sign of the residuals; leaves hold the median
    /// residual of their in-bag rows.
    #[serde(alias = "absolute_error")]
    Absolute,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Squared => "squared",
            Loss::Absolute => "absolute",
        }
    }
}

/// One point of a hyperparameter grid. Fields that do not apply to `kind`
/// are ignored (learning rate, subsample and loss for forests;
/// max_leaf_nodes for boosting only if unset).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleConfig {
    pub kind: ModelKind,
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub subsample: f64,
    pub loss: Loss,
    pub max_leaf_nodes: Option<usize>,
    pub criterion: Criterion,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn rfr(n_estimators: usize, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            kind: ModelKind::Rfr,
            n_estimators,
            learning_rate: 1.0,
            max_depth: None,
            max_features: MaxFeatures::All,
            subsample: 1.0,
            loss: Loss::Squared,
            max_leaf_nodes: None,
            criterion: Criterion::SquaredError,
            seed,
        }
    }

    pub fn gbm(n_estimators: usize, learning_rate: f64, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            kind: ModelKind::Gbm,
            n_estimators,
            learning_rate,
            max_depth: Some(3),
            max_features: MaxFeatures::All,
            subsample: 1.0,
            loss: Loss::Squared,
            max_leaf_nodes: None,
            criterion: Criterion::FriedmanMse,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), MlError> {
        let bad = |m: &str| Err(MlError::InvalidConfig(m.into()));
        if self.n_estimators == 0 {
            return bad("n_estimators must be positive");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be positive");
        }
        if self.max_leaf_nodes.is_some_and(|m| m < 2) {
            return bad("max_leaf_nodes must be at least 2");
        }
        if self.kind == ModelKind::Gbm {
            if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
                return bad("learning_rate must be finite and non-negative");
            }
            if !(self.subsample > 0.0 && self.subsample <= 1.0) {
                return bad("subsample must lie in (0, 1]");
            }
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            max_features: self.max_features,
            max_leaf_nodes: self.max_leaf_nodes,
            criterion: self.criterion,
            ..TreeParams::default()
        }
    }

    /// Compact human-readable description.
    pub fn label(&self) -> alloc::string::String {
        let depth = self.max_depth.map_or("none".into(), |d| format!("{d}"));
        match self.kind {
            ModelKind::Rfr => format!(
                "rfr n={} depth={} features={} leaves={} criterion={}",
                self.n_estimators,
                depth,
                self.max_features.name(),
                self.max_leaf_nodes.map_or("none".into(), |d| format!("{d}")),
                self.criterion.name()
            ),
            ModelKind::Gbm => format!(
                "gbm n={} lr={} depth={} features={} subsample={} loss={}",
                self.n_estimators,
                self.learning_rate,
                depth,
                self.max_features.name(),
                self.subsample,
                self.loss.name()
            ),
        }
    }
}

/// Cartesian hyperparameter grid.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    pub kind: ModelKind,
    pub n_estimators: Vec<usize>,
    #[serde(default = "one")]
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<Option<usize>>,
    pub max_features: Vec<MaxFeatures>,
    #[serde(default = "one")]
    pub subsample: Vec<f64>,
    #[serde(default = "squared")]
    pub loss: Vec<Loss>,
    #[serde(default = "unbounded")]
    pub max_leaf_nodes: Vec<Option<usize>>,
    #[serde(default)]
    pub criterion: Vec<Criterion>,
}

fn one() -> Vec<f64> {
    alloc::vec![1.0]
}
fn squared() -> Vec<Loss> {
    alloc::vec![Loss::Squared]
}
fn unbounded() -> Vec<Option<usize>> {
    alloc::vec![None]
}

const PAPER_ESTIMATORS: [usize; 6] = [5, 10, 25, 50, 100, 150];
const PAPER_DEPTHS: [Option<usize>; 7] = [Some(2), Some(3), Some(5), Some(7), Some(9), Some(12), None];
const PAPER_FEATURES: [MaxFeatures; 3] = [MaxFeatures::Log2, MaxFeatures::Sqrt, MaxFeatures::All];

impl Grid {
    /// The published boosting grid (3780 configurations).
    pub fn paper_gbm() -> Grid {
        Grid {
            kind: ModelKind::Gbm,
            n_estimators: PAPER_ESTIMATORS.to_vec(),
            learning_rate: alloc::vec![0.1, 0.2, 0.3, 0.5, 0.7],
            max_depth: PAPER_DEPTHS.to_vec(),
            max_features: PAPER_FEATURES.to_vec(),
            subsample: alloc::vec![0.5, 0.75, 1.0],
            loss: alloc::vec![Loss::Squared, Loss::Absolute],
            max_leaf_nodes: unbounded(),
            criterion: alloc::vec![Criterion::FriedmanMse],
        }
    }

    /// The published forest grid (756 configurations).
    pub fn paper_rfr() -> Grid {
        Grid {
            kind: ModelKind::Rfr,
            n_estimators: PAPER_ESTIMATORS.to_vec(),
            learning_rate: one(),
            max_depth: PAPER_DEPTHS.to_vec(),
            max_features: PAPER_FEATURES.to_vec(),
            subsample: one(),
            loss: squared(),
            max_leaf_nodes: alloc::vec![Some(100), Some(150), None],
            criterion: alloc::vec![Criterion::SquaredError, Criterion::FriedmanMse],
        }
    }

    /// Every combination, with `seed` attached. Axes that do not apply to
    /// the model kind are ignored.
    pub fn configs(&self, seed: u64) -> Vec<EnsembleConfig> {
        let gbm = self.kind == ModelKind::Gbm;
        let lrs = if gbm { self.learning_rate.clone() } else { one() };
        let subs = if gbm { self.subsample.clone() } else { one() };
        let losses = if gbm { self.loss.clone() } else { squared() };
        let criteria = if self.criterion.is_empty() {
            alloc::vec![if gbm { Criterion::FriedmanMse } else { Criterion::SquaredError }]
        } else {
            self.criterion.clone()
        };
        let mut out = Vec::new();
        for &n in &self.n_estimators {
            for &lr in &lrs {
                for &d in &self.max_depth {
                    for &mf in &self.max_features {
                        for &ss in &subs {
                            for &loss in &losses {
                                for &leaves in &self.max_leaf_nodes {
                                    for &criterion in &criteria {
                                        out.push(EnsembleConfig {
                                            kind: self.kind,
                                            n_estimators: n,
                                            learning_rate: lr,
                                            max_depth: d,
                                            max_features: mf,
                                            subsample: ss,
                                            loss,
                                            max_leaf_nodes: leaves,
                                            criterion,
                                            seed,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// A fitted forest or boosted ensemble.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainedEnsemble {
    pub config: EnsembleConfig,
    pub n_features: usize,
    /// Initial prediction for boosting; zero for forests.
    pub init: f64,
    pub trees: Vec<RegressionTree>,
}

impl TrainedEnsemble {
    /// Multiplier applied to the sum of the first `n` tree outputs.
    pub fn tree_weight(&self, n: usize) -> f64 {
        match self.config.kind {
            ModelKind::Rfr => 1.0 / n as f64,
            ModelKind::Gbm => self.config.learning_rate,
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_prefix(x, self.trees.len())
    }

    /// Prediction of the ensemble truncated to its first `n` trees.
    pub fn predict_prefix(&self, x: &[f64], n: usize) -> f64 {
        let n = n.min(self.trees.len());
        let sum: f64 = self.trees[..n].iter().map(|t| t.predict(x)).sum();
        self.init + self.tree_weight(n) * sum
    }

    /// Predictions after each of the (ascending) prefix lengths in `ns`.
    pub fn staged_predict(&self, x: &[f64], ns: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(ns.len());
        let mut sum = 0.0;
        let mut done = 0;
        for &n in ns {
            let n = n.min(self.trees.len());
            for t in &self.trees[done..n] {
                sum += t.predict(x);
            }
            done = n;
            out.push(self.init + self.tree_weight(n) * sum);
        }
        out
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, MlError> {
        if x.cols() != self.n_features {
            return Err(MlError::SchemaMismatch { expected: self.n_features, found: x.cols() });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    /// Mean model output over the training rows, as weighted by tree covers.
    pub fn expected_value(&self) -> f64 {
        let n = self.trees.len();
        self.init + self.tree_weight(n) * self.trees.iter().map(RegressionTree::expected_value).sum::<f64>()
    }
}

fn check(x: &Matrix, y: &[f64], rows: &[usize], cfg: &EnsembleConfig) -> Result<(), MlError> {
    cfg.validate()?;
    if y.len() != x.rows() {
        return Err(MlError::ShapeMismatch { expected: x.rows(), found: y.len() });
    }
    if rows.len() < 2 {
        return Err(MlError::TooFewRows { rows: rows.len(), needed: 2 });
    }
    if x.cols() == 0 {
        return Err(MlError::NoFeatures);
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    Ok(())
}

/// Fits `cfg` on the given rows of `x`.
pub fn fit(x: &Matrix, y: &[f64], rows: &[usize], cfg: &EnsembleConfig) -> Result<TrainedEnsemble, MlError> {
    match cfg.kind {
        ModelKind::Rfr => fit_rfr(x, y, rows, cfg),
        ModelKind::Gbm => fit_gbm(x, y, rows, cfg),
    }
}

/// Random forest: tree `i` is grown on a bootstrap resample drawn from
/// the stream `i` of the config seed.
pub fn fit_rfr(x: &Matrix, y: &[f64], rows: &[usize], cfg: &EnsembleConfig) -> Result<TrainedEnsemble, MlError> {
    check(x, y, rows, cfg)?;
    let params = cfg.tree_params();
    let n = rows.len();
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    for i in 0..cfg.n_estimators {
        let mut rng = rng_for(cfg.seed, i as u64);
        let sample: Vec<usize> = (0..n).map(|_| rows[rng.gen_range(0..n)]).collect();
        trees.push(fit_tree(x, y, &sample, &params, &mut rng)?);
    }
    Ok(TrainedEnsemble { config: *cfg, n_features: x.cols(), init: 0.0, trees })
}

/// Gradient boosting. Stage `s` draws its subsample and feature choices
/// from stream `s` of the config seed.
pub fn fit_gbm(x: &Matrix, y: &[f64], rows: &[usize], cfg: &EnsembleConfig) -> Result<TrainedEnsemble, MlError> {
    check(x, y, rows, cfg)?;
    let params = cfg.tree_params();
    let n = rows.len();
    let targets: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let init = match cfg.loss {
        Loss::Squared => targets.iter().sum::<f64>() / n as f64,
        Loss::Absolute => median(&targets),
    };
    let mut current = alloc::vec![init; n];
    let mut pseudo = alloc::vec![0.0; x.rows()];
    let n_bag = if cfg.subsample >= 1.0 { n } else { ((cfg.subsample * n as f64) as usize).max(1) };
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    for s in 0..cfg.n_estimators {
        let mut rng = rng_for(cfg.seed, s as u64);
        let bag: Vec<usize> = if n_bag == n {
            (0..n).collect()
        } else {
            let mut b = rand::seq::index::sample(&mut rng, n, n_bag).into_vec();
            b.sort_unstable();
            b
        };
        for (pos, &i) in rows.iter().enumerate() {
            let r = targets[pos] - current[pos];
            pseudo[i] = match cfg.loss {
                Loss::Squared => r,
                Loss::Absolute => {
                    if r > 0.0 {
                        1.0
                    } else if r < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        let bag_rows: Vec<usize> = bag.iter().map(|&p| rows[p]).collect();
        let mut tree = if bag_rows.len() < 2 {
            RegressionTree::constant(pseudo[bag_rows[0]], 1.0, x.cols())
        } else {
            fit_tree(x, &pseudo, &bag_rows, &params, &mut rng)?
        };
        if cfg.loss == Loss::Absolute {
            let mut members: Vec<Vec<f64>> = alloc::vec![Vec::new(); tree.nodes.len()];
            for &p in &bag {
                members[tree.apply(x.row(rows[p]))].push(targets[p] - current[p]);
            }
            for (leaf, m) in members.iter().enumerate() {
                if !m.is_empty() {
                    tree.nodes[leaf].value = median(m);
                }
            }
        }
        for (pos, &i) in rows.iter().enumerate() {
            current[pos] += cfg.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    Ok(TrainedEnsemble { config: *cfg, n_features: x.cols(), init, trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grid_sizes() {
        assert_eq!(Grid::paper_gbm().configs(0).len(), 3780);
        assert_eq!(Grid::paper_rfr().configs(0).len(), 756);
    }

    #[test]
    fn gbm_constant_target_predicts_mean() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let mut cfg = EnsembleConfig::gbm(1, 1.0, 0);
        cfg.max_depth = Some(1);
        let m = fit_gbm(&x, &[2.5; 3], &[0, 1, 2], &cfg).unwrap();
        assert_eq!(m.predict_row(&[7.0]), 2.5);
    }

    #[test]
    fn zero_learning_rate_predicts_init() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let y = [1.0, 5.0, 2.0, 8.0];
        let m = fit_gbm(&x, &y, &[0, 1, 2, 3], &EnsembleConfig::gbm(10, 0.0, 0)).unwrap();
        for r in [0.0, 2.5, 9.0] {
            assert_eq!(m.predict_row(&[r]), 4.0);
        }
    }

    #[test]
    fn absolute_loss_starts_at_median() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let mut cfg = EnsembleConfig::gbm(3, 0.5, 0);
        cfg.loss = Loss::Absolute;
        let m = fit_gbm(&x, &[1.0, 2.0, 100.0], &[0, 1, 2], &cfg).unwrap();
        assert_eq!(m.init, 2.0);
    }

    #[test]
    fn staged_matches_prefix() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [i as f64, ((i * 13) % 7) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 0.5 + r[1]).collect();
        let x = Matrix::from_rows(&rows);
        let idx: Vec<usize> = (0..30).collect();
        for cfg in [EnsembleConfig::rfr(12, 3), EnsembleConfig::gbm(12, 0.3, 3)] {
            let m = fit(&x, &y, &idx, &cfg).unwrap();
            let staged = m.staged_predict(&rows[4], &[1, 5, 12]);
            for (k, n) in [1, 5, 12].into_iter().enumerate() {
                assert_eq!(staged[k], m.predict_prefix(&rows[4], n));
            }
            let mut short = cfg;
            short.n_estimators = 5;
            let m5 = fit(&x, &y, &idx, &short).unwrap();
            assert_eq!(m5.predict_row(&rows[9]), m.predict_prefix(&rows[9], 5));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = EnsembleConfig::gbm(5, 0.1, 0);
        c.subsample = 0.0;
        assert!(c.validate().is_err());
        assert!(EnsembleConfig::rfr(0, 0).validate().is_err());
    }
}
