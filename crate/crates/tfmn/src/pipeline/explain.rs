//! explain stage: TreeSHAP values and plot tables for every trained model,
//! SHAP-guided feature elimination, and the shuffled-target baseline on
//! the surviving features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tfmn_core::explain::{export_plots, shap_feature_elimination, tree_shap, EliminationSettings, PlotBundle, ShapMatrix};
use tfmn_core::features::FeatureTable;
use tfmn_core::ml::{permutation_run, CvReport, PermutationRun, Sequential};
use tfmn_core::stats::{mean, median};

use super::train::{columns_of, matrix, predictions_csv, read_runs, ModelDoc, RunIndexRow, TABLE};
use super::Pipeline;
use crate::error::{Error, Result};
use crate::formats::{self, num, Csv};
use crate::manifest::{upstream, StageDir};
use crate::runner::Parallel;

/// Largest tolerated gap between a prediction and base value plus SHAP sum.
const LOCAL_ACCURACY_TOLERANCE: f64 = 1e-6;

pub(super) const ELIMINATION: &str = "elimination.json";
pub(super) const PERMUTATION: &str = "permutation.json";

/// Shuffled-target cross-validation of the final feature set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationSummary {
    pub features: Vec<String>,
    pub repetitions: Vec<PermutationRep>,
    pub n_significant: usize,
    pub mean_r: f64,
    pub median_p: f64,
    pub mean_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationRep {
    pub repetition: usize,
    pub shuffle_seed: u64,
    pub pearson_r: f64,
    pub p_value: f64,
    pub mae: f64,
}

impl PermutationSummary {
    fn new(features: Vec<String>, runs: &[PermutationRun]) -> PermutationSummary {
        let reps: Vec<PermutationRep> = runs
            .iter()
            .map(|r| PermutationRep {
                repetition: r.repetition,
                shuffle_seed: r.shuffle_seed,
                pearson_r: r.report.pearson_r,
                p_value: r.report.p_value,
                mae: r.report.mae,
            })
            .collect();
        let rs: Vec<f64> = reps.iter().map(|r| r.pearson_r).collect();
        let ps: Vec<f64> = reps.iter().map(|r| r.p_value).collect();
        let maes: Vec<f64> = reps.iter().map(|r| r.mae).collect();
        PermutationSummary {
            features,
            n_significant: runs.iter().filter(|r| r.report.is_significant()).count(),
            mean_r: mean(&rs),
            median_p: median(&ps),
            mean_mae: mean(&maes),
            repetitions: reps,
        }
    }
}

pub(super) fn explain(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let runs = read_runs(p)?;
    let table_path = upstream(p.output(), "train", TABLE)?;
    dir.input_stage("train")?;
    let table: FeatureTable = formats::read_json(&table_path)?;
    let outputs: Vec<Vec<(String, Vec<u8>)>> =
        runs.par_iter().map(|r| explain_run(p, &table, r)).collect::<Result<_>>()?;
    for (rel, bytes) in outputs.iter().flatten() {
        dir.write(rel, bytes)?;
    }
    Ok(())
}

fn explain_run(p: &Pipeline, table: &FeatureTable, run: &RunIndexRow) -> Result<Vec<(String, Vec<u8>)>> {
    let cfg = &p.cfg;
    let fail = |m: String| Error::stage("explain", format!("{} {} {}: {m}", run.target, run.subset, run.model));
    let train_dir = p.stage_dir(super::Stage::Train).join(&run.dir);
    let doc: ModelDoc = formats::read_json(&train_dir.join("model.json"))?;
    let report: CvReport = formats::read_json(&train_dir.join("cv_report.json"))?;
    let model = doc.to_model().map_err(fail)?;
    let t = table.target_index(&run.target).map_err(|e| fail(e.to_string()))?;
    let cols = columns_of(table, &doc.features).map_err(fail)?;
    let x = matrix(table, &cols);
    let y = table.target(t);

    let shap = tree_shap(&model, &x, &doc.features).map_err(|e| fail(e.to_string()))?;
    let err = shap.local_accuracy_error();
    if err.is_nan() || err >= LOCAL_ACCURACY_TOLERANCE {
        return Err(fail(format!("SHAP values miss the predictions by {err:e}")));
    }
    let [lo, hi] = cfg.features.shap_range;
    let display = table.unscaled().minmax_scale(lo, hi);
    let plots = export_plots(&shap, &matrix(&display, &cols)).map_err(|e| fail(e.to_string()))?;

    let base = &run.dir;
    let mut files = vec![(format!("{base}/shap.csv"), shap_csv(&table.ids, &shap))];
    files.extend(plot_files(base, &table.ids, &plots));

    let settings =
        EliminationSettings { delta: cfg.model.delta, n_shuffles: cfg.model.n_shuffles, k: cfg.model.cv_folds, seed: run.seed };
    let elim = shap_feature_elimination(&x, &y, &doc.features, &[report.config], &settings, &Parallel)
        .map_err(|e| fail(e.to_string()))?;
    files.push((format!("{base}/final_predictions.csv"), predictions_csv(&table.ids, &elim.final_report)));
    files.push((format!("{base}/{ELIMINATION}"), formats::json_bytes(&elim).map_err(|e| fail(e.to_string()))?));

    if cfg.model.n_perm > 0 {
        let kept: Vec<usize> = elim.kept.iter().map(|&j| cols[j]).collect();
        let xk = matrix(table, &kept);
        let grid = [report.config];
        let runs: Vec<PermutationRun> = (0..cfg.model.n_perm)
            .into_par_iter()
            .map(|rep| {
                permutation_run(&xk, &y, &elim.kept_features, &grid, cfg.model.cv_folds, run.seed, rep, &Sequential)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| fail(e.to_string()))?;
        files.push((format!("{base}/{PERMUTATION}"), {
            let summary = PermutationSummary::new(elim.kept_features.clone(), &runs);
            formats::json_bytes(&summary).map_err(|e| fail(e.to_string()))?
        }));
    }
    Ok(files)
}

fn shap_csv(ids: &[String], s: &ShapMatrix) -> Vec<u8> {
    let mut header = vec!["transcript_id".to_string(), "prediction".to_string(), "base_value".to_string()];
    header.extend(s.features.iter().cloned());
    let mut w = Csv::new(header);
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone(), num(s.predictions[i]), num(s.base_value)];
        row.extend(s.values[i].iter().map(|v| num(*v)));
        w.row(row);
    }
    w.into_bytes()
}

fn plot_files(base: &str, ids: &[String], plots: &PlotBundle) -> Vec<(String, Vec<u8>)> {
    let mut bee = Csv::new(["feature", "code", "transcript_id", "value", "shap"]);
    for pt in &plots.beeswarm {
        bee.row([
            pt.feature.clone(),
            pt.code.clone().unwrap_or_default(),
            ids[pt.sample].clone(),
            num(pt.value),
            num(pt.shap),
        ]);
    }
    let mut bar = Csv::new(["feature", "code", "mean_abs_shap"]);
    for b in &plots.bar {
        bar.row([b.feature.clone(), b.code.clone().unwrap_or_default(), num(b.mean_abs_shap)]);
    }
    let h = &plots.heatmap;
    let mut header = vec!["transcript_id".to_string(), "prediction".to_string()];
    header.extend(h.features.iter().cloned());
    let mut heat = Csv::new(header);
    for (r, &sample) in h.samples.iter().enumerate() {
        let mut row = vec![ids[sample].clone(), num(h.predictions[r])];
        row.extend(h.values[r].iter().map(|v| num(*v)));
        heat.row(row);
    }
    vec![
        (format!("{base}/beeswarm.csv"), bee.into_bytes()),
        (format!("{base}/bar.csv"), bar.into_bytes()),
        (format!("{base}/heatmap.csv"), heat.into_bytes()),
    ]
}
