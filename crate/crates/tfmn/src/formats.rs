//! Reading and writing the plain-text artifacts: CoNLL-U corpora,
//! lexicons, target tables, edge lists and JSON documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use tfmn_core::conllu::{parse_conllu_with_default_id, ParseOutcome};
use tfmn_core::lexicon::{Emotion, EmotionSet, Valence};
use tfmn_core::tfmn::{EdgeKinds, NodeTag, Tfmn};
use tfmn_core::{EmotionLexicon, Stopwords, SynonymLexicon};

use crate::error::{Error, Result};

/// The bundled English stopword list.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = json_bytes(value).map_err(|e| Error::format(path, e))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e))
}

pub fn load_stopwords(path: Option<&Path>) -> Result<Stopwords> {
    let words = match path {
        Some(p) => Stopwords::parse(&read_text(p)?),
        None => Stopwords::parse(DEFAULT_STOPWORDS),
    };
    if words.is_empty() {
        return Err(Error::format(path.unwrap_or(Path::new("<bundled stopwords>")), "no stopwords"));
    }
    Ok(words)
}

pub fn load_emotion_lexicon(path: &Path) -> Result<EmotionLexicon> {
    let lex = EmotionLexicon::parse(&read_text(path)?).map_err(|e| Error::format(path, e))?;
    if lex.n_emotion_words() == 0 {
        return Err(Error::format(path, "lexicon has no emotion-bearing words"));
    }
    Ok(lex)
}

pub fn load_synonyms(path: &Path) -> Result<SynonymLexicon> {
    SynonymLexicon::parse(&read_text(path)?).map_err(|e| Error::format(path, e))
}

/// `*.conllu` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "conllu") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Parse every corpus file. Text before a `# newdoc id` comment belongs to
/// a transcript named after the file stem.
pub fn read_corpus(dir: &Path, stopwords: &Stopwords) -> Result<ParseOutcome> {
    let files = corpus_files(dir)?;
    if files.is_empty() {
        return Err(Error::format(dir, "no .conllu files"));
    }
    let mut out = ParseOutcome::default();
    let mut seen = BTreeSet::new();
    for f in files {
        let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let parsed = parse_conllu_with_default_id(&bytes, stopwords, &stem).map_err(|e| Error::format(&f, e))?;
        for t in &parsed.transcripts {
            if !seen.insert(t.transcript_id.clone()) {
                return Err(Error::format(&f, format!("transcript {:?} appears in more than one file", t.transcript_id)));
            }
        }
        out.transcripts.extend(parsed.transcripts);
        out.warnings.extend(parsed.warnings);
    }
    out.transcripts.sort_by(|a, b| a.transcript_id.cmp(&b.transcript_id));
    Ok(out)
}

/// Target scores keyed by transcript id. Missing cells are NaN.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Targets {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

pub const ID_COLUMN: &str = "transcript_id";

pub fn read_targets(path: &Path) -> Result<Targets> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Error::format(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::format(path, e))?.clone();
    if headers.get(0) != Some(ID_COLUMN) {
        return Err(Error::format(path, format!("first column must be {ID_COLUMN}")));
    }
    let names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    if names.is_empty() {
        return Err(Error::format(path, "no target columns"));
    }
    let mut rows = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e))?;
        let id = rec.get(0).unwrap_or_default().to_string();
        let mut values = Vec::with_capacity(names.len());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            values.push(parse_cell(cell).ok_or_else(|| {
                Error::format(path, format!("row {}: column {} has non-numeric value {cell:?}", i + 2, names[j]))
            })?);
        }
        if rows.insert(id.clone(), values).is_some() {
            return Err(Error::format(path, format!("duplicate transcript id {id:?}")));
        }
    }
    Ok(Targets { names, rows })
}

fn parse_cell(cell: &str) -> Option<f64> {
    match cell {
        "" | "NA" | "NaN" | "nan" => Some(f64::NAN),
        s => s.parse().ok(),
    }
}

/// Shortest round-trip decimal form; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// `u<TAB>v<TAB>kinds` with `u < v`, in order.
pub fn edge_list(g: &Tfmn) -> String {
    let mut s = String::from("source\ttarget\tkinds\n");
    for (a, b, k) in g.edges() {
        s.push_str(&format!("{a}\t{b}\t{}\n", k.label()));
    }
    s
}

/// `lemma<TAB>valence<TAB>emotions`, emotions comma-separated.
pub fn node_list(g: &Tfmn) -> String {
    let mut s = String::from("node\tvalence\temotions\n");
    for n in g.nodes() {
        let tag = g.tag(n);
        let emotions: Vec<&str> = tag.emotions.iter().map(|e| e.name()).collect();
        s.push_str(&format!("{n}\t{}\t{}\n", valence_name(tag.valence), emotions.join(",")));
    }
    s
}

fn valence_name(v: Valence) -> &'static str {
    match v {
        Valence::Positive => "positive",
        Valence::Negative => "negative",
        Valence::Neutral => "neutral",
    }
}

/// Rebuild a network from its edge and node lists.
pub fn read_network(edges_path: &Path, nodes_path: &Path, k: usize) -> Result<Tfmn> {
    let mut nodes = BTreeSet::new();
    let mut tags = BTreeMap::new();
    for (i, line) in read_text(nodes_path)?.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |m: &str| Error::format(nodes_path, format!("line {}: {m}", i + 1));
        if f.len() != 3 {
            return Err(bad("expected node<TAB>valence<TAB>emotions"));
        }
        let valence = match f[1] {
            "positive" => Valence::Positive,
            "negative" => Valence::Negative,
            "neutral" => Valence::Neutral,
            _ => return Err(bad("unknown valence")),
        };
        let mut emotions = EmotionSet::EMPTY;
        for name in f[2].split(',').filter(|s| !s.is_empty()) {
            emotions.insert(Emotion::from_name(name).ok_or_else(|| bad("unknown emotion"))?);
        }
        nodes.insert(f[0].to_string());
        tags.insert(f[0].to_string(), NodeTag { valence, emotions });
    }
    let mut edges = Vec::new();
    for (i, line) in read_text(edges_path)?.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let kinds = (f.len() == 3).then(|| EdgeKinds::parse_label(f[2])).flatten();
        let Some(kinds) = kinds else {
            return Err(Error::format(edges_path, format!("line {}: expected source<TAB>target<TAB>kinds", i + 1)));
        };
        edges.push((f[0].to_string(), f[1].to_string(), kinds));
    }
    Tfmn::from_parts(k, nodes, edges, tags).map_err(|e| Error::format(edges_path, e))
}

/// Graph document for external tools.
#[derive(Serialize)]
pub struct GraphDoc<'a> {
    pub transcript_id: &'a str,
    pub k: usize,
    pub nodes: Vec<GraphNode<'a>>,
    pub edges: Vec<GraphEdge<'a>>,
}

#[derive(Serialize)]
pub struct GraphNode<'a> {
    pub id: &'a str,
    pub valence: &'static str,
    pub emotions: Vec<&'static str>,
}

#[derive(Serialize)]
pub struct GraphEdge<'a> {
    pub source: &'a str,
    pub target: &'a str,
    pub syntactic: bool,
    pub synonym: bool,
}

pub fn graph_doc<'a>(id: &'a str, g: &'a Tfmn) -> GraphDoc<'a> {
    GraphDoc {
        transcript_id: id,
        k: g.k(),
        nodes: g
            .nodes()
            .iter()
            .map(|n| {
                let tag = g.tag(n);
                GraphNode { id: n, valence: valence_name(tag.valence), emotions: tag.emotions.iter().map(|e| e.name()).collect() }
            })
            .collect(),
        edges: g
            .edges()
            .map(|(a, b, k)| GraphEdge { source: a, target: b, syntactic: k.syntactic, synonym: k.synonym })
            .collect(),
    }
}

/// A name usable as a single path component.
pub fn file_safe(name: &str) -> String {
    let s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

/// CSV writer into memory.
pub struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    pub fn new<I, S>(header: I) -> Csv
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Csv(w)
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.0.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0.into_inner().expect("in-memory flush")
    }
}
