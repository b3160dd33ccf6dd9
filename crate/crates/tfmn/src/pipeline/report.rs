//! report stage: summary tables for the combined, network-only and
//! emotion-only feature sets, the shuffled-target baseline, and the
//! feature-target correlation overview.

use serde::{Deserialize, Serialize};
use tfmn_core::explain::Elimination;
use tfmn_core::features::feature_code;

use super::explain::{PermutationSummary, ELIMINATION, PERMUTATION};
use super::train::{read_runs, TARGET_CORRELATIONS};
use super::Pipeline;
use crate::error::{Error, Result};
use crate::formats;
use crate::manifest::{require_stage, upstream, StageDir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub target: String,
    pub model: String,
    /// Features kept after elimination.
    pub features: Vec<String>,
    pub codes: Vec<Option<String>>,
    pub pearson_r: f64,
    pub p_value: f64,
    pub mae: f64,
    /// Pooled r before elimination.
    pub screened_r: f64,
    pub config: String,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutedRow {
    pub target: String,
    pub subset: String,
    pub model: String,
    pub features: Vec<String>,
    pub repetitions: usize,
    pub n_significant: usize,
    pub mean_r: f64,
    pub median_p: f64,
    pub mean_mae: f64,
    /// Pooled r with the real targets, for comparison.
    pub observed_r: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub combined: Vec<ReportRow>,
    pub network: Vec<ReportRow>,
    pub emotion: Vec<ReportRow>,
    pub permuted: Vec<PermutedRow>,
}

pub(super) fn report(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let runs = read_runs(p)?;
    let corr_path = upstream(p.output(), "train", TARGET_CORRELATIONS)?;
    require_stage(p.output(), "explain")?;
    dir.input_stage("train")?;
    dir.input_stage("explain")?;
    let explain_dir = p.stage_dir(super::Stage::Explain);

    let mut tables = Tables::default();
    for run in &runs {
        let elim_path = explain_dir.join(&run.dir).join(ELIMINATION);
        if !elim_path.is_file() {
            return Err(Error::MissingUpstreamArtifact { stage: "explain", artifact: elim_path });
        }
        let elim: Elimination = formats::read_json(&elim_path)?;
        let fin = &elim.final_report;
        let row = ReportRow {
            target: run.target.clone(),
            model: run.model.clone(),
            codes: elim.kept_features.iter().map(|f| feature_code(f)).collect(),
            features: elim.kept_features.clone(),
            pearson_r: fin.pearson_r,
            p_value: fin.p_value,
            mae: fin.mae,
            screened_r: elim.initial.pearson_r,
            config: elim.config.label(),
            significant: fin.is_significant(),
        };
        match run.subset.as_str() {
            "combined" => tables.combined.push(row),
            "network" => tables.network.push(row),
            _ => tables.emotion.push(row),
        }
        let perm_path = explain_dir.join(&run.dir).join(PERMUTATION);
        if perm_path.is_file() {
            let s: PermutationSummary = formats::read_json(&perm_path)?;
            tables.permuted.push(PermutedRow {
                target: run.target.clone(),
                subset: run.subset.clone(),
                model: run.model.clone(),
                features: s.features,
                repetitions: s.repetitions.len(),
                n_significant: s.n_significant,
                mean_r: s.mean_r,
                median_p: s.median_p,
                mean_mae: s.mean_mae,
                observed_r: fin.pearson_r,
            });
        }
    }
    let corr = formats::read_text(&corr_path)?;
    dir.write_json("tables.json", &tables)?;
    dir.write("tables.md", render(&tables, &corr))
}

fn r3(x: f64) -> String {
    format!("{x:.3}")
}

fn p_fmt(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.3}")
    }
}

fn feature_list(features: &[String], codes: &[Option<String>]) -> String {
    features
        .iter()
        .zip(codes)
        .map(|(f, c)| match c {
            Some(c) => format!("{f} ({c})"),
            None => f.clone(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn model_table(out: &mut String, title: &str, rows: &[ReportRow]) {
    out.push_str(&format!("## {title}\n\n"));
    out.push_str("| Target | Model | r | p | MAE | r before elimination | Features |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for r in rows {
        let star = if r.significant { "" } else { " (n.s.)" };
        out.push_str(&format!(
            "| {} | {} | {}{star} | {} | {} | {} | {} |\n",
            r.target,
            r.model.to_uppercase(),
            r3(r.pearson_r),
            p_fmt(r.p_value),
            r3(r.mae),
            r3(r.screened_r),
            feature_list(&r.features, &r.codes)
        ));
    }
    out.push('\n');
}

/// Markdown rendering of all tables. The correlation section is the CSV
/// written by the train stage, reshaped.
pub fn render(t: &Tables, correlations_csv: &str) -> String {
    let mut out = String::from("# Results\n\n");
    model_table(&mut out, "Combined features", &t.combined);
    model_table(&mut out, "Network features only", &t.network);
    model_table(&mut out, "Emotion features only", &t.emotion);

    out.push_str("## Permuted targets\n\n");
    out.push_str("| Target | Features | Model | mean r | median p | significant | MAE | r with real targets |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in &t.permuted {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {}/{} | {} | {} |\n",
            r.target,
            r.subset,
            r.model.to_uppercase(),
            r3(r.mean_r),
            p_fmt(r.median_p),
            r.n_significant,
            r.repetitions,
            r3(r.mean_mae),
            r3(r.observed_r)
        ));
    }
    out.push('\n');

    out.push_str("## Feature-target correlations\n\n");
    let mut rdr = csv::Reader::from_reader(correlations_csv.as_bytes());
    let header: Vec<String> = rdr.headers().map(|h| h.iter().skip(1).map(String::from).collect()).unwrap_or_default();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for rec in rdr.records().flatten() {
        let cells: Vec<String> = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| match c.parse::<f64>() {
                Ok(v) if i >= 3 => r3(v),
                _ => c.replace('|', "\\|"),
            })
            .collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}
