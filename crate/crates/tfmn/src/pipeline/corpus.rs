//! ingest, build, metrics and emotions stages.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use tfmn_core::conllu::{write_conllu, Demographics, Transcript};
use tfmn_core::emotion::{profile_transcript, EmotionProfile};
use tfmn_core::features::emotion_column;
use tfmn_core::lexicon::Emotion;
use tfmn_core::metrics::{MetricOptions, METRIC_COLUMNS, METRIC_LABELS};
use tfmn_core::rng::{derive, hash_str};
use tfmn_core::tfmn::{build_syntactic, distance_cdf, enrich_synonyms, tag_nodes, Tfmn, TfmnError};
use tfmn_core::{parse_conllu, MetricVector, Stopwords};

use super::Pipeline;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::formats::{self, file_safe, num, Csv};
use crate::manifest::{upstream, StageDir};

const CORPUS: &str = "corpus.conllu";
const DEMOGRAPHICS: &str = "demographics.json";
const NETWORKS: &str = "networks.csv";
pub(super) const METRICS_JSON: &str = "metrics.json";
pub(super) const PROFILES_JSON: &str = "profiles.json";

fn stopwords(p: &Pipeline, dir: &mut StageDir) -> Result<Stopwords> {
    match &p.cfg.paths.stopwords {
        Some(path) => dir.input_file("stopwords", path)?,
        None => {
            let h = crate::manifest::sha256_hex(formats::DEFAULT_STOPWORDS.as_bytes());
            dir.input_file_hash("stopwords", h);
        }
    }
    formats::load_stopwords(p.cfg.paths.stopwords.as_deref())
}

/// Transcripts as normalized by the ingest stage.
fn ingested(p: &Pipeline, dir: &mut StageDir) -> Result<Vec<Transcript>> {
    let path = upstream(p.output(), "ingest", CORPUS)?;
    dir.input_stage("ingest")?;
    let words = stopwords(p, dir)?;
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let parsed = parse_conllu(&bytes, &words).map_err(|e| Error::format(&path, e))?;
    Ok(parsed.transcripts)
}

pub(super) fn ingest(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let words = stopwords(p, dir)?;
    let corpus = &p.cfg.paths.corpus;
    for f in formats::corpus_files(corpus)? {
        let name = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        dir.input_file(format!("corpus/{name}"), &f)?;
    }
    let parsed = formats::read_corpus(corpus, &words)?;
    if parsed.transcripts.is_empty() {
        return Err(Error::stage("ingest", "corpus holds no transcripts"));
    }
    dir.write(CORPUS, write_conllu(&parsed.transcripts))?;

    let mut summary = Csv::new(["transcript_id", "sentences", "tokens", "content_tokens", "age", "sex"]);
    let mut demographics: BTreeMap<&str, &Demographics> = BTreeMap::new();
    for t in &parsed.transcripts {
        let tokens = t.sentences.iter().map(|s| s.tokens.len()).sum::<usize>();
        let content = t.sentences.iter().flat_map(|s| &s.tokens).filter(|t| t.is_content()).count();
        summary.row([
            t.transcript_id.clone(),
            t.sentences.len().to_string(),
            tokens.to_string(),
            content.to_string(),
            t.demographics.age.map(num).unwrap_or_default(),
            t.demographics.sex.map(|s| s.to_string()).unwrap_or_default(),
        ]);
        demographics.insert(&t.transcript_id, &t.demographics);
    }
    dir.write("transcripts.csv", summary.into_bytes())?;
    dir.write_json(DEMOGRAPHICS, &demographics)?;

    let mut warnings = Csv::new(["line", "transcript_id", "sentence_id", "kind"]);
    for w in &parsed.warnings {
        warnings.row([w.line.to_string(), w.transcript_id.clone(), w.sentence_id.clone(), format!("{:?}", w.kind)]);
    }
    dir.write("warnings.csv", warnings.into_bytes())
}

fn network(cfg: &Config, t: &Transcript, lex: &Lexicons) -> Result<Tfmn, TfmnError> {
    let mut g = build_syntactic(t, cfg.network.k)?;
    if let Some(syn) = &lex.synonyms {
        g = enrich_synonyms(&g, syn, cfg.network.synonym_scope);
    }
    Ok(tag_nodes(&g, &lex.emotion, lex.emotion.valence()))
}

struct Lexicons {
    emotion: tfmn_core::EmotionLexicon,
    synonyms: Option<tfmn_core::SynonymLexicon>,
}

pub(super) fn build(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let transcripts = ingested(p, dir)?;
    let paths = &p.cfg.paths;
    dir.input_file("emotion_lexicon", &paths.emotion_lexicon)?;
    let emotion = formats::load_emotion_lexicon(&paths.emotion_lexicon)?;
    let synonyms = match &paths.synonyms {
        Some(s) => {
            dir.input_file("synonyms", s)?;
            Some(formats::load_synonyms(s)?)
        }
        None => None,
    };
    let lex = Lexicons { emotion, synonyms };

    let built: Vec<(&Transcript, Result<Tfmn, TfmnError>)> =
        transcripts.par_iter().map(|t| (t, network(&p.cfg, t, &lex))).collect();
    let mut index = Csv::new(["transcript_id", "file", "nodes", "edges", "synonym_edges"]);
    let mut skipped = Csv::new(["transcript_id", "reason"]);
    let mut stems = BTreeSet::new();
    let mut n_built = 0;
    for (t, g) in built {
        let g = match g {
            Ok(g) => g,
            Err(e) => {
                skipped.row([t.transcript_id.clone(), e.to_string()]);
                continue;
            }
        };
        let stem = file_safe(&t.transcript_id);
        if !stems.insert(stem.clone()) {
            return Err(Error::stage("build", format!("transcript ids collide as file name {stem:?}")));
        }
        dir.write(&format!("networks/{stem}.edges.tsv"), formats::edge_list(&g))?;
        dir.write(&format!("networks/{stem}.nodes.tsv"), formats::node_list(&g))?;
        dir.write_json(&format!("networks/{stem}.json"), &formats::graph_doc(&t.transcript_id, &g))?;
        let synonym_edges = g.edges().filter(|(_, _, k)| k.synonym).count();
        index.row([
            t.transcript_id.clone(),
            stem,
            g.nodes().len().to_string(),
            g.n_edges().to_string(),
            synonym_edges.to_string(),
        ]);
        n_built += 1;
    }
    if n_built == 0 {
        return Err(Error::stage("build", "no transcript yields a network"));
    }
    dir.write(NETWORKS, index.into_bytes())?;
    dir.write("skipped.csv", skipped.into_bytes())?;
    dir.write("cdf.csv", cdf_csv(&transcripts))
}

fn cdf_csv(transcripts: &[Transcript]) -> Vec<u8> {
    let mut w = Csv::new(["k", "cdf"]);
    for (k, c) in distance_cdf(transcripts) {
        w.row([k.to_string(), num(c)]);
    }
    w.into_bytes()
}

/// Tab-separated distance CDF of the configured corpus, read directly from
/// the corpus directory.
pub fn cdf_table(cfg: &Config) -> Result<String> {
    let words = formats::load_stopwords(cfg.paths.stopwords.as_deref())?;
    let parsed = formats::read_corpus(&cfg.paths.corpus, &words)?;
    let mut s = String::from("k\tcdf\n");
    for (k, c) in distance_cdf(&parsed.transcripts) {
        s.push_str(&format!("{k}\t{c:.4}\n"));
    }
    Ok(s)
}

pub(super) fn metrics(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let index_path = upstream(p.output(), "build", NETWORKS)?;
    dir.input_stage("build")?;
    let mut rdr = csv::Reader::from_path(&index_path).map_err(|e| Error::format(&index_path, e))?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(&index_path, e))?;
        entries.push((rec[0].to_string(), rec[1].to_string()));
    }
    let net_dir = p.stage_dir(super::Stage::Build).join("networks");
    let k = p.cfg.network.k;
    let computed: Vec<Result<(String, Result<MetricVector, String>)>> = entries
        .par_iter()
        .map(|(id, stem)| {
            let g = formats::read_network(
                &net_dir.join(format!("{stem}.edges.tsv")),
                &net_dir.join(format!("{stem}.nodes.tsv")),
                k,
            )?;
            let opts = MetricOptions { community: p.cfg.network.community, seed: derive(p.cfg.seed, hash_str(id)) };
            let m = MetricVector::compute(&g.to_graph(p.cfg.network.synonym_edges_in_metrics), &opts)
                .map_err(|e| e.to_string());
            Ok((id.clone(), m))
        })
        .collect();

    let mut header = vec!["transcript_id"];
    header.extend(METRIC_COLUMNS);
    header.push("assortativity_undefined");
    let mut table = Csv::new(header);
    let mut skipped = Csv::new(["transcript_id", "reason"]);
    let mut all = BTreeMap::new();
    for r in computed {
        let (id, m) = r?;
        match m {
            Ok(m) => {
                let mut row = vec![id.clone()];
                row.extend(m.values().iter().map(|v| num(*v)));
                row.push(m.assortativity_undefined.to_string());
                table.row(row);
                all.insert(id, m);
            }
            Err(reason) => skipped.row([id, reason]),
        }
    }
    if all.is_empty() {
        return Err(Error::stage("metrics", "no network has computable metrics"));
    }
    dir.write("metrics.csv", table.into_bytes())?;
    dir.write("skipped.csv", skipped.into_bytes())?;
    dir.write_json(METRICS_JSON, &all)?;

    #[derive(serde::Serialize)]
    struct Column {
        column: &'static str,
        label: &'static str,
        code: Option<String>,
    }
    let schema: Vec<Column> = METRIC_COLUMNS
        .iter()
        .zip(METRIC_LABELS)
        .map(|(c, l)| Column { column: c, label: l, code: tfmn_core::features::feature_code(c) })
        .collect();
    dir.write_json("schema.json", &schema)
}

pub(super) fn emotions(p: &Pipeline, dir: &mut StageDir) -> Result<()> {
    let transcripts = ingested(p, dir)?;
    let paths = &p.cfg.paths;
    dir.input_file("emotion_lexicon", &paths.emotion_lexicon)?;
    let lex = formats::load_emotion_lexicon(&paths.emotion_lexicon)?;
    let e = &p.cfg.emotion;
    let profiles: Vec<(String, EmotionProfile)> = transcripts
        .par_iter()
        .map(|t| {
            profile_transcript(t, &lex, e.samples, p.cfg.seed, e.sampling)
                .map(|prof| (t.transcript_id.clone(), prof))
                .map_err(|err| Error::stage("emotions", format!("{}: {err}", t.transcript_id)))
        })
        .collect::<Result<_>>()?;

    let mut header = vec!["transcript_id".to_string(), "emotional_words".to_string()];
    header.extend(Emotion::ALL.iter().map(|e| emotion_column(*e)));
    header.extend(Emotion::ALL.iter().map(|e| format!("count_{}", e.name())));
    header.extend(Emotion::ALL.iter().map(|e| format!("significance_{}", e.name())));
    header.extend(["n_samples".to_string(), "seed".to_string()]);
    let mut table = Csv::new(header);
    for (id, prof) in &profiles {
        let mut row = vec![id.clone(), prof.m_emotional.to_string()];
        row.extend(Emotion::ALL.iter().map(|e| num(prof.z_scores[*e])));
        row.extend(Emotion::ALL.iter().map(|e| prof.counts[*e].to_string()));
        row.extend(Emotion::ALL.iter().map(|e| {
            use tfmn_core::emotion::Significance;
            match prof.significance[*e] {
                Significance::Over => "over",
                Significance::Under => "under",
                Significance::None if prof.degenerate[*e] => "degenerate",
                Significance::None => "none",
            }
            .to_string()
        }));
        row.extend([prof.n_samples.to_string(), prof.seed.to_string()]);
        table.row(row);
    }
    dir.write("profiles.csv", table.into_bytes())?;
    let map: BTreeMap<String, EmotionProfile> = profiles.into_iter().collect();
    dir.write_json(PROFILES_JSON, &map)
}

pub(super) fn demographics(p: &Pipeline, dir: &mut StageDir) -> Result<BTreeMap<String, Demographics>> {
    let path = upstream(p.output(), "ingest", DEMOGRAPHICS)?;
    dir.input_stage("ingest")?;
    formats::read_json(&path)
}
