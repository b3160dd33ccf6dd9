//! Word lists and lexicons: stopwords, emotion/valence associations and
//! synonym sets, together with their plain-text line formats.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// The eight basic emotions of the EmoLex-style lexicon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Trust,
    Joy,
    Sadness,
    Surprise,
    Anticipation,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Trust,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Anticipation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Trust => "trust",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Anticipation => "anticipation",
        }
    }

    /// One-letter code used in result tables.
    pub fn code(self) -> char {
        match self {
            Emotion::Anger => 'G',
            Emotion::Disgust => 'D',
            Emotion::Fear => 'F',
            Emotion::Trust => 'T',
            Emotion::Joy => 'J',
            Emotion::Sadness => 'S',
            Emotion::Surprise => 'U',
            Emotion::Anticipation => 'A',
        }
    }

    pub fn from_name(s: &str) -> Option<Emotion> {
        Emotion::ALL.into_iter().find(|e| e.name() == s)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// A subset of the eight emotions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmotionSet(u8);

impl EmotionSet {
    pub const EMPTY: EmotionSet = EmotionSet(0);

    pub fn contains(self, e: Emotion) -> bool {
        self.0 & e.bit() != 0
    }

    pub fn insert(&mut self, e: Emotion) {
        self.0 |= e.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Emotion> {
        Emotion::ALL.into_iter().filter(move |e| self.contains(*e))
    }
}

impl FromIterator<Emotion> for EmotionSet {
    fn from_iter<I: IntoIterator<Item = Emotion>>(iter: I) -> Self {
        let mut s = EmotionSet::EMPTY;
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl serde::Serialize for EmotionSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> serde::Deserialize<'de> for EmotionSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<Emotion> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Negative,
    #[default]
    Neutral,
}

/// Line-level error in a lexicon or word-list file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexiconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl core::error::Error for LexiconError {}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// Lowercased stopword lemmas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    /// One lemma per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Stopwords {
        Stopwords(content_lines(text).map(|(_, l)| l.trim().to_lowercase()).collect())
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.0.contains(lemma)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl<S: AsRef<str>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.as_ref().to_lowercase()).collect())
    }
}

/// Word to valence mapping.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValenceLexicon(BTreeMap<String, Valence>);

impl ValenceLexicon {
    /// Lines `word<TAB>positive|negative`.
    pub fn parse(text: &str) -> Result<ValenceLexicon, LexiconError> {
        let mut map = BTreeMap::new();
        for (line, l) in content_lines(text) {
            let mut parts = l.split('\t');
            let (Some(word), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(LexiconError { line, message: "expected word<TAB>valence".to_string() });
            };
            let v = match label.trim() {
                "positive" => Valence::Positive,
                "negative" => Valence::Negative,
                "neutral" => Valence::Neutral,
                other => {
                    return Err(LexiconError { line, message: alloc::format!("unknown valence {other:?}") })
                }
            };
            map.insert(word.trim().to_lowercase(), v);
        }
        Ok(ValenceLexicon(map))
    }

    pub fn get(&self, word: &str) -> Valence {
        self.0.get(word).copied().unwrap_or_default()
    }

    pub fn insert(&mut self, word: &str, v: Valence) {
        self.0.insert(word.to_lowercase(), v);
    }
}

/// EmoLex-style word associations: eight emotions plus positive/negative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmotionLexicon {
    emotions: BTreeMap<String, EmotionSet>,
    valence: ValenceLexicon,
    /// Emotion sets of emotion-bearing entries, in word order.
    bearing: Vec<EmotionSet>,
}

impl EmotionLexicon {
    /// Lines `word<TAB>category<TAB>0|1`, where category is one of the
    /// eight emotions, `positive` or `negative`. Rows flagged `0` are
    /// ignored. A word flagged both positive and negative is neutral.
    pub fn parse(text: &str) -> Result<EmotionLexicon, LexiconError> {
        let mut emotions: BTreeMap<String, EmotionSet> = BTreeMap::new();
        let mut polarity: BTreeMap<String, (bool, bool)> = BTreeMap::new();
        for (line, l) in content_lines(text) {
            let fields: Vec<&str> = l.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(LexiconError { line, message: "expected word<TAB>category<TAB>0|1".to_string() });
            }
            let flag = match fields[2] {
                "0" => false,
                "1" => true,
                other => return Err(LexiconError { line, message: alloc::format!("bad association flag {other:?}") }),
            };
            let word = fields[0].to_lowercase();
            match fields[1] {
                "positive" | "negative" => {
                    let entry = polarity.entry(word).or_default();
                    if flag {
                        if fields[1] == "positive" {
                            entry.0 = true;
                        } else {
                            entry.1 = true;
                        }
                    }
                }
                cat => {
                    let Some(e) = Emotion::from_name(cat) else {
                        return Err(LexiconError { line, message: alloc::format!("unknown category {cat:?}") });
                    };
                    let entry = emotions.entry(word).or_default();
                    if flag {
                        entry.insert(e);
                    }
                }
            }
        }
        let mut valence = ValenceLexicon::default();
        for (word, (pos, neg)) in polarity {
            match (pos, neg) {
                (true, false) => valence.insert(&word, Valence::Positive),
                (false, true) => valence.insert(&word, Valence::Negative),
                _ => {}
            }
        }
        Ok(Self::from_parts(emotions, valence))
    }

    pub fn from_parts(emotions: BTreeMap<String, EmotionSet>, valence: ValenceLexicon) -> EmotionLexicon {
        let emotions: BTreeMap<String, EmotionSet> =
            emotions.into_iter().filter(|(_, s)| !s.is_empty()).collect();
        let bearing = emotions.values().copied().collect();
        EmotionLexicon { emotions, valence, bearing }
    }

    /// Build from `(word, emotions)` pairs, with no valence information.
    pub fn from_entries<'a, I>(entries: I) -> EmotionLexicon
    where
        I: IntoIterator<Item = (&'a str, &'a [Emotion])>,
    {
        let map = entries
            .into_iter()
            .map(|(w, es)| (w.to_lowercase(), es.iter().copied().collect()))
            .collect();
        Self::from_parts(map, ValenceLexicon::default())
    }

    pub fn emotions_of(&self, word: &str) -> EmotionSet {
        self.emotions.get(word).copied().unwrap_or_default()
    }

    pub fn valence(&self) -> &ValenceLexicon {
        &self.valence
    }

    /// Number of words associated with at least one emotion.
    pub fn n_emotion_words(&self) -> usize {
        self.bearing.len()
    }

    /// Emotion sets of all emotion-bearing words.
    pub fn emotion_bearing(&self) -> &[EmotionSet] {
        &self.bearing
    }
}

/// Synonym sets: two words are synonyms iff they share a synset id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymLexicon(BTreeMap<String, BTreeSet<String>>);

impl SynonymLexicon {
    /// Lines `word<TAB>synset_id`.
    pub fn parse(text: &str) -> Result<SynonymLexicon, LexiconError> {
        let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (line, l) in content_lines(text) {
            let mut parts = l.split('\t');
            let (Some(word), Some(synset), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(LexiconError { line, message: "expected word<TAB>synset_id".to_string() });
            };
            let (word, synset) = (word.trim(), synset.trim());
            if word.is_empty() || synset.is_empty() {
                return Err(LexiconError { line, message: "empty word or synset id".to_string() });
            }
            map.entry(word.to_lowercase()).or_default().insert(synset.to_string());
        }
        Ok(SynonymLexicon(map))
    }

    pub fn add(&mut self, word: &str, synset: &str) {
        self.0.entry(word.to_lowercase()).or_default().insert(synset.to_string());
    }

    pub fn synsets(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.0.get(word)
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        match (self.0.get(a), self.0.get(b)) {
            (Some(x), Some(y)) => x.intersection(y).next().is_some(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emolex_lines() {
        let text = "# header\nhappy\tjoy\t1\nhappy\ttrust\t1\nhappy\tfear\t0\nhappy\tpositive\t1\n\
                    dark\tsadness\t1\ndark\tnegative\t1\nodd\tpositive\t1\nodd\tnegative\t1\nplain\tjoy\t0\n";
        let lex = EmotionLexicon::parse(text).unwrap();
        let happy = lex.emotions_of("happy");
        assert!(happy.contains(Emotion::Joy) && happy.contains(Emotion::Trust));
        assert!(!happy.contains(Emotion::Fear));
        assert_eq!(lex.n_emotion_words(), 2);
        assert_eq!(lex.valence().get("happy"), Valence::Positive);
        assert_eq!(lex.valence().get("dark"), Valence::Negative);
        assert_eq!(lex.valence().get("odd"), Valence::Neutral);
        assert_eq!(lex.valence().get("missing"), Valence::Neutral);
    }

    #[test]
    fn emolex_rejects_unknown_category() {
        let err = EmotionLexicon::parse("x\tboredom\t1\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn synonyms_share_a_synset() {
        let lex = SynonymLexicon::parse("happy\ts1\nglad\ts1\nglad\ts2\ntable\ts9\n").unwrap();
        assert!(lex.are_synonyms("happy", "glad"));
        assert!(!lex.are_synonyms("happy", "table"));
        assert!(!lex.are_synonyms("happy", "unknown"));
    }

    #[test]
    fn stopword_file_comments() {
        let s = Stopwords::parse("# list\nThe\n a \n\n");
        assert!(s.contains("the") && s.contains("a"));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn emotion_codes_are_unique() {
        let codes: BTreeSet<char> = Emotion::ALL.iter().map(|e| e.code()).collect();
        assert_eq!(codes.len(), 8);
    }
}
