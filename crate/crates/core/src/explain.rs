//! Path-dependent TreeSHAP, SHAP-guided feature elimination and plot data.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::features::feature_code;
use crate::ml::{cross_validate, fit, permutation, EnsembleConfig, GridRunner, Matrix, MlError, RegressionTree, TrainedEnsemble};
use crate::ml::CvReport;
use crate::rng::derive;
use crate::stats::median;

#[derive(Clone, Copy, Debug, Default)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend_path(path: &mut [PathElement], depth: usize, zero: f64, one: f64, feature: Option<usize>) {
    path[depth] = PathElement {
        feature,
        zero_fraction: zero,
        one_fraction: one,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    };
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind_path(path: &mut [PathElement], depth: usize, index: usize) {
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * d1 / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

fn unwound_path_sum(path: &[PathElement], depth: usize, index: usize) -> f64 {
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

struct Walk<'a> {
    tree: &'a RegressionTree,
    x: &'a [f64],
    phi: &'a mut [f64],
    scale: f64,
    buf: Vec<PathElement>,
}

impl Walk<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, node: usize, parent: usize, offset: usize, mut depth: usize, zero: f64, one: f64, feature: Option<usize>) {
        if offset != parent {
            self.buf.copy_within(parent..parent + depth + 1, offset);
        }
        extend_path(&mut self.buf[offset..], depth, zero, one, feature);
        let n = &self.tree.nodes[node];
        let Some(s) = n.split else {
            let path = &self.buf[offset..];
            for i in 1..=depth {
                let w = unwound_path_sum(path, depth, i);
                let el = path[i];
                if let Some(f) = el.feature {
                    self.phi[f] += self.scale * w * (el.one_fraction - el.zero_fraction) * n.value;
                }
            }
            return;
        };
        let (hot, cold) = if self.x[s.feature] <= s.threshold { (s.left, s.right) } else { (s.right, s.left) };
        let cover = n.cover;
        let hot_zero = self.tree.nodes[hot].cover / cover;
        let cold_zero = self.tree.nodes[cold].cover / cover;
        let (mut in_zero, mut in_one) = (1.0, 1.0);
        if let Some(k) = (1..=depth).find(|&k| self.buf[offset + k].feature == Some(s.feature)) {
            in_zero = self.buf[offset + k].zero_fraction;
            in_one = self.buf[offset + k].one_fraction;
            unwind_path(&mut self.buf[offset..], depth, k);
            depth -= 1;
        }
        let child = offset + depth + 1;
        self.recurse(hot, offset, child, depth + 1, hot_zero * in_zero, in_one, Some(s.feature));
        self.recurse(cold, offset, child, depth + 1, cold_zero * in_zero, 0.0, Some(s.feature));
    }
}

/// Adds `scale` times the exact SHAP values of one tree at `x` to `phi`.
/// Missing features are marginalised by the training cover of each branch.
pub fn tree_shap_into(tree: &RegressionTree, x: &[f64], scale: f64, phi: &mut [f64]) {
    let d = tree.depth();
    let mut walk = Walk { tree, x, phi, scale, buf: vec![PathElement::default(); (d + 2) * (d + 3) / 2 + 1] };
    walk.recurse(0, 0, 0, 0, 1.0, 1.0, None);
}

/// SHAP values of one row in the ensemble's column order.
pub fn shap_row(model: &TrainedEnsemble, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; model.n_features];
    let scale = model.tree_weight(model.trees.len());
    for t in &model.trees {
        tree_shap_into(t, x, scale, &mut phi);
    }
    phi
}

/// Per-sample SHAP attributions, columns ordered by decreasing mean |SHAP|.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShapMatrix {
    pub features: Vec<String>,
    /// Input column of each entry of `features`.
    pub columns: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    pub base_value: f64,
    pub predictions: Vec<f64>,
    pub mean_abs: Vec<f64>,
}

impl ShapMatrix {
    /// Largest `|base + sum(phi) - prediction|` over the rows.
    pub fn local_accuracy_error(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.predictions)
            .map(|(row, p)| libm::fabs(self.base_value + row.iter().sum::<f64>() - p))
            .fold(0.0, f64::max)
    }

    /// Input columns by increasing mean |SHAP|, ties by column index.
    pub fn ascending_columns(&self) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = self.mean_abs.iter().copied().zip(self.columns.iter().copied()).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|p| p.1).collect()
    }

    /// Mean |SHAP| of an input column.
    pub fn importance_of(&self, column: usize) -> Option<f64> {
        self.columns.iter().position(|&c| c == column).map(|k| self.mean_abs[k])
    }
}

/// SHAP values of `model` on every row of `x`.
pub fn tree_shap(model: &TrainedEnsemble, x: &Matrix, features: &[String]) -> Result<ShapMatrix, MlError> {
    if x.cols() != model.n_features {
        return Err(MlError::SchemaMismatch { expected: model.n_features, found: x.cols() });
    }
    if features.len() != x.cols() {
        return Err(MlError::SchemaMismatch { expected: x.cols(), found: features.len() });
    }
    let p = x.cols();
    let raw: Vec<Vec<f64>> = (0..x.rows()).map(|i| shap_row(model, x.row(i))).collect();
    let predictions: Vec<f64> = (0..x.rows()).map(|i| model.predict_row(x.row(i))).collect();
    let n = x.rows().max(1) as f64;
    let mean_abs: Vec<f64> = (0..p).map(|j| raw.iter().map(|r| libm::fabs(r[j])).sum::<f64>() / n).collect();
    let mut columns: Vec<usize> = (0..p).collect();
    columns.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
    Ok(ShapMatrix {
        features: columns.iter().map(|&j| features[j].clone()).collect(),
        values: raw.iter().map(|r| columns.iter().map(|&j| r[j]).collect()).collect(),
        mean_abs: columns.iter().map(|&j| mean_abs[j]).collect(),
        columns,
        base_value: model.expected_value(),
        predictions,
    })
}

/// Settings for [`shap_feature_elimination`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EliminationSettings {
    /// A feature is dropped when shuffling it lowers pooled r by at most this.
    pub delta: f64,
    /// Shuffles per feature; their r values are aggregated by the median.
    pub n_shuffles: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for EliminationSettings {
    fn default() -> Self {
        EliminationSettings { delta: 0.01, n_shuffles: 1, k: 4, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Dropped,
    Kept,
    /// Not tested because it was the only feature left.
    LastFeature,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EliminationStep {
    pub step: usize,
    pub feature: String,
    pub column: usize,
    pub mean_abs_shap: f64,
    pub baseline_r: f64,
    pub shuffled_r: Vec<f64>,
    pub r_drop: f64,
    pub decision: Decision,
    pub remaining: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Elimination {
    pub settings: EliminationSettings,
    pub config: EnsembleConfig,
    pub initial: CvReport,
    pub steps: Vec<EliminationStep>,
    /// Surviving input columns, in input order.
    pub kept: Vec<usize>,
    pub kept_features: Vec<String>,
    pub final_report: CvReport,
}

const SHUFFLE_STREAM: u64 = 0x7368_7566_0000_0000;

/// Top-down elimination. The grid is searched once on all features; the
/// selected configuration is then held fixed. Features are visited from
/// the lowest mean |SHAP| of a model fit on all rows; each is shuffled and
/// cross-validated again, and dropped for good if pooled r falls by no
/// more than `delta`, after which the baseline is re-measured without it.
pub fn shap_feature_elimination(
    x: &Matrix,
    y: &[f64],
    features: &[String],
    grid: &[EnsembleConfig],
    settings: &EliminationSettings,
    runner: &impl GridRunner,
) -> Result<Elimination, MlError> {
    if settings.n_shuffles == 0 {
        return Err(MlError::InvalidConfig("n_shuffles must be positive".into()));
    }
    let (k, seed) = (settings.k, settings.seed);
    let initial = cross_validate(x, y, features, grid, k, seed, runner)?;
    let cfg = initial.config;
    let all: Vec<usize> = (0..x.rows()).collect();
    let shap = tree_shap(&fit(x, y, &all, &cfg)?, x, features)?;

    let names = |cols: &[usize]| -> Vec<String> { cols.iter().map(|&j| features[j].clone()).collect() };
    let mut current: Vec<usize> = (0..x.cols()).collect();
    let mut baseline = cross_validate(x, y, features, &[cfg], k, seed, runner)?;
    let mut steps = Vec::new();
    for (step, col) in shap.ascending_columns().into_iter().enumerate() {
        let mut record = EliminationStep {
            step,
            feature: features[col].clone(),
            column: col,
            mean_abs_shap: shap.importance_of(col).unwrap_or(0.0),
            baseline_r: baseline.pearson_r,
            shuffled_r: Vec::new(),
            r_drop: 0.0,
            decision: Decision::LastFeature,
            remaining: Vec::new(),
        };
        if current.len() > 1 {
            let pos = current.iter().position(|&c| c == col).unwrap_or(0);
            let sub = x.select_columns(&current);
            let sub_names = names(&current);
            for s in 0..settings.n_shuffles {
                let stream = SHUFFLE_STREAM + (step * settings.n_shuffles + s) as u64;
                let perm = permutation(x.rows(), Some(derive(seed, stream)));
                let shuffled = sub.with_permuted_column(pos, &perm);
                record.shuffled_r.push(cross_validate(&shuffled, y, &sub_names, &[cfg], k, seed, runner)?.pearson_r);
            }
            record.r_drop = baseline.pearson_r - median(&record.shuffled_r);
            if record.r_drop <= settings.delta {
                record.decision = Decision::Dropped;
                current.retain(|&c| c != col);
                baseline = cross_validate(&x.select_columns(&current), y, &names(&current), &[cfg], k, seed, runner)?;
            } else {
                record.decision = Decision::Kept;
            }
        }
        record.remaining = names(&current);
        steps.push(record);
    }
    Ok(Elimination {
        settings: *settings,
        config: cfg,
        initial,
        steps,
        kept_features: names(&current),
        kept: current,
        final_report: baseline,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BeeswarmPoint {
    pub feature: String,
    pub code: Option<String>,
    pub sample: usize,
    pub value: f64,
    pub shap: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BarEntry {
    pub feature: String,
    pub code: Option<String>,
    pub mean_abs_shap: f64,
}

/// Sample-by-feature SHAP grid with samples in increasing order of
/// model output.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Heatmap {
    pub features: Vec<String>,
    pub samples: Vec<usize>,
    pub predictions: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlotBundle {
    pub base_value: f64,
    pub beeswarm: Vec<BeeswarmPoint>,
    pub bar: Vec<BarEntry>,
    pub heatmap: Heatmap,
}

/// Beeswarm, bar and heatmap data. `x_scaled` holds the model's input
/// columns (in input order) on the display scale.
pub fn export_plots(shap: &ShapMatrix, x_scaled: &Matrix) -> Result<PlotBundle, MlError> {
    if x_scaled.rows() != shap.values.len() {
        return Err(MlError::ShapeMismatch { expected: shap.values.len(), found: x_scaled.rows() });
    }
    if shap.columns.iter().any(|&c| c >= x_scaled.cols()) {
        return Err(MlError::SchemaMismatch { expected: shap.columns.len(), found: x_scaled.cols() });
    }
    let mut beeswarm = Vec::with_capacity(shap.values.len() * shap.features.len());
    for (k, (name, &col)) in shap.features.iter().zip(&shap.columns).enumerate() {
        let code = feature_code(name);
        for (i, row) in shap.values.iter().enumerate() {
            beeswarm.push(BeeswarmPoint { feature: name.clone(), code: code.clone(), sample: i, value: x_scaled.get(i, col), shap: row[k] });
        }
    }
    let bar = shap
        .features
        .iter()
        .zip(&shap.mean_abs)
        .map(|(f, m)| BarEntry { feature: f.clone(), code: feature_code(f), mean_abs_shap: *m })
        .collect();
    let mut samples: Vec<usize> = (0..shap.values.len()).collect();
    samples.sort_by(|&a, &b| shap.predictions[a].total_cmp(&shap.predictions[b]).then(a.cmp(&b)));
    let heatmap = Heatmap {
        features: shap.features.clone(),
        predictions: samples.iter().map(|&i| shap.predictions[i]).collect(),
        values: samples.iter().map(|&i| shap.values[i].clone()).collect(),
        samples,
    };
    Ok(PlotBundle { base_value: shap.base_value, beeswarm, bar, heatmap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{Node, Split};

    fn stump(feature: usize, threshold: f64, left: f64, right: f64, cl: f64, cr: f64) -> RegressionTree {
        RegressionTree {
            nodes: vec![
                Node { value: 0.0, cover: cl + cr, impurity: 0.0, split: Some(Split { feature, threshold, left: 1, right: 2 }) },
                Node { value: left, cover: cl, impurity: 0.0, split: None },
                Node { value: right, cover: cr, impurity: 0.0, split: None },
            ],
            n_features: 3,
            criterion: Default::default(),
        }
    }

    #[test]
    fn single_leaf_has_zero_attribution() {
        let t = RegressionTree::constant(2.0, 5.0, 2);
        let mut phi = [0.0; 2];
        tree_shap_into(&t, &[1.0, 1.0], 1.0, &mut phi);
        assert_eq!(phi, [0.0, 0.0]);
        assert_eq!(t.expected_value(), 2.0);
    }

    #[test]
    fn stump_closed_form() {
        // E = (3*1 + 1*5)/4 = 2; left phi = 1 - 2, right phi = 5 - 2.
        let t = stump(1, 0.5, 1.0, 5.0, 3.0, 1.0);
        let mut phi = [0.0; 3];
        tree_shap_into(&t, &[9.0, 0.0, 9.0], 1.0, &mut phi);
        assert!((phi[1] + 1.0).abs() < 1e-12 && phi[0] == 0.0 && phi[2] == 0.0);
        let mut phi = [0.0; 3];
        tree_shap_into(&t, &[9.0, 1.0, 9.0], 1.0, &mut phi);
        assert!((phi[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_feature_on_path() {
        // x0 split twice on the same path.
        let t = RegressionTree {
            nodes: vec![
                Node { value: 0.0, cover: 10.0, impurity: 0.0, split: Some(Split { feature: 0, threshold: 5.0, left: 1, right: 2 }) },
                Node { value: 0.0, cover: 6.0, impurity: 0.0, split: Some(Split { feature: 0, threshold: 2.0, left: 3, right: 4 }) },
                Node { value: 10.0, cover: 4.0, impurity: 0.0, split: None },
                Node { value: 1.0, cover: 2.0, impurity: 0.0, split: None },
                Node { value: 4.0, cover: 4.0, impurity: 0.0, split: None },
            ],
            n_features: 1,
            criterion: Default::default(),
        };
        let mut phi = [0.0];
        tree_shap_into(&t, &[1.0], 1.0, &mut phi);
        assert!((phi[0] - (1.0 - t.expected_value())).abs() < 1e-12);
    }

    #[test]
    fn heatmap_and_bar_shape() {
        let shap = ShapMatrix {
            features: vec!["modularity".into(), "z_joy".into()],
            columns: vec![1, 0],
            values: vec![vec![1.0, -1.0], vec![-3.0, 0.5], vec![2.0, 0.0]],
            base_value: 0.0,
            predictions: vec![0.0, -2.5, 2.0],
            mean_abs: vec![2.0, 0.5],
        };
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let b = export_plots(&shap, &x).unwrap();
        assert_eq!(b.beeswarm.len(), 6);
        assert_eq!(b.beeswarm[0].value, 2.0);
        assert_eq!(b.bar[0].code.as_deref(), Some("1"));
        assert_eq!(b.bar[1].code.as_deref(), Some("J"));
        assert_eq!(b.heatmap.samples, vec![1, 0, 2]);
        assert_eq!(shap.ascending_columns(), vec![0, 1]);
    }
}
