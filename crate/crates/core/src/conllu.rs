//! CoNLL-U ingestion: sentences become rooted dependency trees of tokens.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lexicon::Stopwords;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub id: u32,
    pub surface: String,
    /// Lowercased lemma; the surface form when the LEMMA column is empty.
    pub lemma: String,
    pub upos: String,
    /// Governing token id, 0 for the root.
    pub head: u32,
    pub deprel: String,
    pub is_stopword: bool,
    pub is_alpha: bool,
}

impl Token {
    pub fn is_punct(&self) -> bool {
        self.upos == "PUNCT"
    }

    /// Whether the token may become a network node.
    pub fn is_content(&self) -> bool {
        !self.is_stopword && self.is_alpha && !self.is_punct()
    }
}

/// At least one letter and no digits.
pub fn is_alpha_lemma(lemma: &str) -> bool {
    lemma.chars().any(char::is_alphabetic) && !lemma.chars().any(char::is_numeric)
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SentenceTree {
    pub sentence_id: String,
    pub tokens: Vec<Token>,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Demographics {
    /// Age in years.
    pub age: Option<f64>,
    /// 0 = female, 1 = male.
    pub sex: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Transcript {
    pub transcript_id: String,
    pub sentences: Vec<SentenceTree>,
    pub demographics: Demographics,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConlluError {
    InvalidUtf8 { offset: usize },
    EmptyStopwords,
    /// A token line without exactly ten tab-separated fields, or with an
    /// unparseable ID/HEAD column.
    MalformedLine { line: usize, message: String },
    DuplicateTranscript(String),
    UnknownToken { id: u32 },
}

impl fmt::Display for ConlluError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConlluError::InvalidUtf8 { offset } => write!(f, "input is not UTF-8 (byte {offset})"),
            ConlluError::EmptyStopwords => f.write_str("stopword set is empty"),
            ConlluError::MalformedLine { line, message } => write!(f, "malformed line {line}: {message}"),
            ConlluError::DuplicateTranscript(id) => write!(f, "duplicate transcript id {id:?}"),
            ConlluError::UnknownToken { id } => write!(f, "no token with id {id}"),
        }
    }
}

impl core::error::Error for ConlluError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WarningKind {
    MultipleRoots,
    NoRoot,
    DanglingHead,
    Cycle,
    NonSequentialIds,
}

/// A sentence that was dropped during parsing.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ParseWarning {
    /// Line of the sentence's first token.
    pub line: usize,
    pub transcript_id: String,
    pub sentence_id: String,
    pub kind: WarningKind,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ParseOutcome {
    pub transcripts: Vec<Transcript>,
    pub warnings: Vec<ParseWarning>,
}

struct PendingSentence {
    id: Option<String>,
    first_line: usize,
    tokens: Vec<Token>,
}

struct Parser<'a> {
    stopwords: &'a Stopwords,
    default_id: &'a str,
    out: ParseOutcome,
    current: Option<Transcript>,
    sentence: Option<PendingSentence>,
    pending_sent_id: Option<String>,
}

impl Parser<'_> {
    fn transcript(&mut self) -> &mut Transcript {
        self.current.get_or_insert_with(|| Transcript {
            transcript_id: self.default_id.to_string(),
            sentences: Vec::new(),
            demographics: Demographics::default(),
        })
    }

    fn start_document(&mut self, id: &str) -> Result<(), ConlluError> {
        self.end_sentence();
        self.end_document()?;
        self.current = Some(Transcript {
            transcript_id: id.to_string(),
            sentences: Vec::new(),
            demographics: Demographics::default(),
        });
        Ok(())
    }

    fn end_document(&mut self) -> Result<(), ConlluError> {
        if let Some(t) = self.current.take() {
            if self.out.transcripts.iter().any(|o| o.transcript_id == t.transcript_id) {
                return Err(ConlluError::DuplicateTranscript(t.transcript_id));
            }
            self.out.transcripts.push(t);
        }
        Ok(())
    }

    fn end_sentence(&mut self) {
        let Some(s) = self.sentence.take() else { return };
        let transcript = self.transcript();
        let sentence_id =
            s.id.unwrap_or_else(|| format!("{}-s{}", transcript.transcript_id, transcript.sentences.len() + 1));
        let tree = SentenceTree { sentence_id, tokens: s.tokens };
        match validate(&tree) {
            Ok(()) => transcript.sentences.push(tree),
            Err(kind) => {
                let warning = ParseWarning {
                    line: s.first_line,
                    transcript_id: transcript.transcript_id.clone(),
                    sentence_id: tree.sentence_id,
                    kind,
                };
                self.out.warnings.push(warning);
            }
        }
    }

    fn comment(&mut self, body: &str) -> Result<(), ConlluError> {
        let Some((key, value)) = body.split_once('=') else { return Ok(()) };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "newdoc id" => self.start_document(value)?,
            "sent_id" => {
                self.end_sentence();
                self.pending_sent_id = Some(value.to_string());
            }
            "age" => {
                if let Ok(age) = value.parse::<f64>() {
                    self.transcript().demographics.age = Some(age);
                }
            }
            "sex" => {
                let code = match value.to_ascii_lowercase().as_str() {
                    "0" | "f" | "female" => Some(0),
                    "1" | "m" | "male" => Some(1),
                    _ => None,
                };
                self.transcript().demographics.sex = code;
            }
            _ => {}
        }
        Ok(())
    }

    fn token_line(&mut self, line_no: usize, line: &str) -> Result<(), ConlluError> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(ConlluError::MalformedLine {
                line: line_no,
                message: format!("expected 10 tab-separated fields, found {}", fields.len()),
            });
        }
        // Multiword ranges and empty nodes carry no basic-tree structure.
        if fields[0].contains('-') || fields[0].contains('.') {
            return Ok(());
        }
        let malformed = |message: String| ConlluError::MalformedLine { line: line_no, message };
        let id: u32 = fields[0].parse().map_err(|_| malformed(format!("bad ID {:?}", fields[0])))?;
        let head: u32 = fields[6].parse().map_err(|_| malformed(format!("bad HEAD {:?}", fields[6])))?;
        if id == 0 {
            return Err(malformed("token ID must be >= 1".to_string()));
        }
        if head == id {
            return Err(malformed(format!("token {id} is its own head")));
        }
        let surface = fields[1].to_string();
        let lemma_field = if fields[2] == "_" || fields[2].is_empty() { fields[1] } else { fields[2] };
        let lemma = lemma_field.to_lowercase();
        if lemma.is_empty() {
            return Err(malformed("empty FORM and LEMMA".to_string()));
        }
        let token = Token {
            id,
            is_stopword: self.stopwords.contains(&lemma),
            is_alpha: is_alpha_lemma(&lemma),
            surface,
            lemma,
            upos: fields[3].to_string(),
            head,
            deprel: fields[7].to_string(),
        };
        let pending = &mut self.pending_sent_id;
        self.sentence
            .get_or_insert_with(|| PendingSentence { id: pending.take(), first_line: line_no, tokens: Vec::new() })
            .tokens
            .push(token);
        Ok(())
    }
}

fn validate(tree: &SentenceTree) -> Result<(), WarningKind> {
    let n = tree.tokens.len();
    if tree.tokens.iter().enumerate().any(|(i, t)| t.id as usize != i + 1) {
        return Err(WarningKind::NonSequentialIds);
    }
    match tree.tokens.iter().filter(|t| t.head == 0).count() {
        0 => return Err(WarningKind::NoRoot),
        1 => {}
        _ => return Err(WarningKind::MultipleRoots),
    }
    if tree.tokens.iter().any(|t| t.head as usize > n) {
        return Err(WarningKind::DanglingHead);
    }
    for t in &tree.tokens {
        let mut cur = t.head;
        let mut steps = 0;
        while cur != 0 {
            steps += 1;
            if steps > n {
                return Err(WarningKind::Cycle);
            }
            cur = tree.tokens[cur as usize - 1].head;
        }
    }
    Ok(())
}

/// Parse a CoNLL-U document. Tokens preceding any `# newdoc id` comment
/// belong to a transcript named `"doc"`.
pub fn parse_conllu(input: &[u8], stopwords: &Stopwords) -> Result<ParseOutcome, ConlluError> {
    parse_conllu_with_default_id(input, stopwords, "doc")
}

/// As [`parse_conllu`], naming the implicit leading transcript `default_id`.
pub fn parse_conllu_with_default_id(
    input: &[u8],
    stopwords: &Stopwords,
    default_id: &str,
) -> Result<ParseOutcome, ConlluError> {
    if stopwords.is_empty() {
        return Err(ConlluError::EmptyStopwords);
    }
    let text = core::str::from_utf8(input).map_err(|e| ConlluError::InvalidUtf8 { offset: e.valid_up_to() })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut p = Parser {
        stopwords,
        default_id,
        out: ParseOutcome::default(),
        current: None,
        sentence: None,
        pending_sent_id: None,
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            p.end_sentence();
        } else if let Some(body) = line.strip_prefix('#') {
            p.comment(body)?;
        } else {
            p.token_line(line_no, line)?;
        }
    }
    p.end_sentence();
    p.end_document()?;
    Ok(p.out)
}

/// Serialize transcripts back to CoNLL-U. XPOS, FEATS, DEPS and MISC are
/// written as `_`.
pub fn write_conllu(transcripts: &[Transcript]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for t in transcripts {
        let _ = writeln!(out, "# newdoc id = {}", t.transcript_id);
        if let Some(age) = t.demographics.age {
            let _ = writeln!(out, "# age = {age}");
        }
        if let Some(sex) = t.demographics.sex {
            let _ = writeln!(out, "# sex = {sex}");
        }
        for s in &t.sentences {
            let _ = writeln!(out, "# sent_id = {}", s.sentence_id);
            for tok in &s.tokens {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                    tok.id, tok.surface, tok.lemma, tok.upos, tok.head, tok.deprel
                );
            }
            out.push('\n');
        }
    }
    out
}

impl SentenceTree {
    /// Undirected adjacency over token positions (0-based).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.tokens.len()];
        for (i, t) in self.tokens.iter().enumerate() {
            if t.head != 0 {
                let h = t.head as usize - 1;
                adj[i].push(h);
                adj[h].push(i);
            }
        }
        adj
    }

    /// Hop counts from position `from` to every token within `max_hops`.
    pub fn distances_within(&self, adjacency: &[Vec<usize>], from: usize, max_hops: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.tokens.len()];
        dist[from] = Some(0);
        let mut frontier = vec![from];
        let mut d = 0;
        while !frontier.is_empty() && d < max_hops {
            d += 1;
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &adjacency[u] {
                    if dist[v].is_none() {
                        dist[v] = Some(d);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    fn ancestors(&self, id: u32) -> Vec<u32> {
        let mut chain = vec![id];
        let mut cur = self.tokens[id as usize - 1].head;
        while cur != 0 {
            chain.push(cur);
            cur = self.tokens[cur as usize - 1].head;
        }
        chain
    }
}

/// Number of edges on the tree path between tokens `i` and `j`.
pub fn tree_distance(s: &SentenceTree, i: u32, j: u32) -> Result<usize, ConlluError> {
    for id in [i, j] {
        if id == 0 || id as usize > s.tokens.len() {
            return Err(ConlluError::UnknownToken { id });
        }
    }
    let up_i = s.ancestors(i);
    let up_j = s.ancestors(j);
    // Walk both root-ward chains from the root end until they diverge.
    let mut common = 0;
    while common < up_i.len()
        && common < up_j.len()
        && up_i[up_i.len() - 1 - common] == up_j[up_j.len() - 1 - common]
    {
        common += 1;
    }
    Ok(up_i.len() - common + up_j.len() - common)
}
