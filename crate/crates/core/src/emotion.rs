//! Emotion profiling against a repeated-sampling null model.
//!
//! A text with `M` emotion-bearing words is compared with `N` random draws
//! of `M` words from the lexicon's emotion-bearing entries. Each emotion's
//! observed count becomes a z-score against the mean and standard deviation
//! of the sampled counts.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use rand::seq::index;
use rand::Rng as _;

use crate::conllu::Transcript;
use crate::lexicon::{Emotion, EmotionLexicon};
use crate::tfmn::Tfmn;

/// Two-sided 5% critical value.
pub const SIGNIFICANCE_Z: f64 = 1.96;

/// Default number of null-model samples.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Minimum number of null-model samples.
pub const MIN_SAMPLES: usize = 100;

/// One value per emotion, in [`Emotion::ALL`] order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PerEmotion<T>(pub [T; 8]);

impl<T> Index<Emotion> for PerEmotion<T> {
    type Output = T;
    fn index(&self, e: Emotion) -> &T {
        &self.0[e as usize]
    }
}

impl<T> IndexMut<Emotion> for PerEmotion<T> {
    fn index_mut(&mut self, e: Emotion) -> &mut T {
        &mut self.0[e as usize]
    }
}

impl<T: Copy> PerEmotion<T> {
    pub fn iter(&self) -> impl Iterator<Item = (Emotion, T)> + '_ {
        Emotion::ALL.into_iter().map(move |e| (e, self[e]))
    }
}

impl<T: serde::Serialize> serde::Serialize for PerEmotion<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(Emotion::ALL.iter().map(|e| (e.name(), &self.0[*e as usize])))
    }
}

impl<'de, T: serde::Deserialize<'de> + Default + Copy> serde::Deserialize<'de> for PerEmotion<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map: alloc::collections::BTreeMap<Emotion, T> = serde::Deserialize::deserialize(d)?;
        let mut out = PerEmotion::<T>::default();
        for (e, v) in map {
            out[e] = v;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmotionError {
    /// The null model needs at least one emotion-bearing word.
    ZeroM,
    TooFewSamples(usize),
    /// More words requested than the lexicon holds (sampling without
    /// replacement).
    MTooLarge { m: usize, lexicon: usize },
    /// Null model built for a different `M` than the observed counts.
    MMismatch { counts: usize, null: usize },
}

impl fmt::Display for EmotionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmotionError::ZeroM => f.write_str("no emotion-bearing words to sample"),
            EmotionError::TooFewSamples(n) => write!(f, "null model needs at least {MIN_SAMPLES} samples, got {n}"),
            EmotionError::MTooLarge { m, lexicon } => {
                write!(f, "cannot draw {m} distinct words from {lexicon} emotion-bearing entries")
            }
            EmotionError::MMismatch { counts, null } => write!(f, "counts have M = {counts} but null model M = {null}"),
        }
    }
}

impl core::error::Error for EmotionError {}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmotionCounts {
    /// Words eliciting each emotion.
    pub counts: PerEmotion<usize>,
    /// Words eliciting at least one emotion.
    pub m: usize,
}

/// Count emotion words with multiplicity.
pub fn count_emotions<'a, I>(words: I, lex: &EmotionLexicon) -> EmotionCounts
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = EmotionCounts::default();
    for w in words {
        let set = lex.emotions_of(w);
        if set.is_empty() {
            continue;
        }
        out.m += 1;
        for e in set.iter() {
            out.counts[e] += 1;
        }
    }
    out
}

/// How null-model draws pick lexicon words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithoutReplacement,
    WithReplacement,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NullModel {
    pub m: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub mean: PerEmotion<f64>,
    /// Standard deviation of the sampled counts (population form).
    pub std: PerEmotion<f64>,
}

/// Draw `m` emotion-bearing lexicon words `n` times and summarize the
/// per-emotion counts.
pub fn null_model(
    m: usize,
    lex: &EmotionLexicon,
    n: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<NullModel, EmotionError> {
    let pool = lex.emotion_bearing();
    if m == 0 {
        return Err(EmotionError::ZeroM);
    }
    if n < MIN_SAMPLES {
        return Err(EmotionError::TooFewSamples(n));
    }
    if pool.is_empty() || (sampling == Sampling::WithoutReplacement && m > pool.len()) {
        return Err(EmotionError::MTooLarge { m, lexicon: pool.len() });
    }
    let mut rng = crate::rng::rng_for(seed, m as u64);
    let mut sum = [0.0f64; 8];
    let mut sum_sq = [0.0f64; 8];
    let mut draw = [0usize; 8];
    for _ in 0..n {
        draw.iter_mut().for_each(|c| *c = 0);
        let mut tally = |i: usize| {
            for e in pool[i].iter() {
                draw[e as usize] += 1;
            }
        };
        match sampling {
            Sampling::WithoutReplacement => index::sample(&mut rng, pool.len(), m).into_iter().for_each(&mut tally),
            Sampling::WithReplacement => (0..m).for_each(|_| tally(rng.gen_range(0..pool.len()))),
        }
        for e in 0..8 {
            let c = draw[e] as f64;
            sum[e] += c;
            sum_sq[e] += c * c;
        }
    }
    let nf = n as f64;
    let mut mean = PerEmotion([0.0; 8]);
    let mut std = PerEmotion([0.0; 8]);
    for e in 0..8 {
        let mu = sum[e] / nf;
        mean.0[e] = mu;
        std.0[e] = libm::sqrt((sum_sq[e] / nf - mu * mu).max(0.0));
    }
    Ok(NullModel { m, n_samples: n, seed, mean, std })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Significance {
    /// `Z > 1.96`
    Over,
    /// `Z < -1.96`
    Under,
    #[default]
    None,
}

impl Significance {
    pub fn of(z: f64) -> Significance {
        if z > SIGNIFICANCE_Z {
            Significance::Over
        } else if z < -SIGNIFICANCE_Z {
            Significance::Under
        } else {
            Significance::None
        }
    }

    pub fn is_significant(self) -> bool {
        self != Significance::None
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ZScores {
    pub z: PerEmotion<f64>,
    pub significance: PerEmotion<Significance>,
    /// Emotions whose null standard deviation is 0; their z is reported as 0.
    pub degenerate: PerEmotion<bool>,
}

/// `Z_e = (n_e - mean_e) / std_e` per emotion.
pub fn z_scores(counts: &EmotionCounts, null: &NullModel) -> Result<ZScores, EmotionError> {
    if counts.m != null.m {
        return Err(EmotionError::MMismatch { counts: counts.m, null: null.m });
    }
    let mut out = ZScores::default();
    for e in Emotion::ALL {
        let sd = null.std[e];
        if sd > 0.0 {
            let z = (counts.counts[e] as f64 - null.mean[e]) / sd;
            out.z[e] = z;
            out.significance[e] = Significance::of(z);
        } else {
            out.degenerate[e] = true;
        }
    }
    Ok(out)
}

/// Emotion z-scores of one word collection.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmotionProfile {
    pub counts: PerEmotion<usize>,
    pub m_emotional: usize,
    pub z_scores: PerEmotion<f64>,
    pub significance: PerEmotion<Significance>,
    pub degenerate: PerEmotion<bool>,
    pub n_samples: usize,
    pub seed: u64,
}

impl EmotionProfile {
    /// Profile a word collection. Without any emotion-bearing word every
    /// z-score is 0 and flagged degenerate.
    pub fn compute<'a, I>(
        words: I,
        lex: &EmotionLexicon,
        n_samples: usize,
        seed: u64,
        sampling: Sampling,
    ) -> Result<EmotionProfile, EmotionError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let counts = count_emotions(words, lex);
        let z = if counts.m == 0 {
            if n_samples < MIN_SAMPLES {
                return Err(EmotionError::TooFewSamples(n_samples));
            }
            ZScores { degenerate: PerEmotion([true; 8]), ..ZScores::default() }
        } else {
            z_scores(&counts, &null_model(counts.m, lex, n_samples, seed, sampling)?)?
        };
        Ok(EmotionProfile {
            counts: counts.counts,
            m_emotional: counts.m,
            z_scores: z.z,
            significance: z.significance,
            degenerate: z.degenerate,
            n_samples,
            seed,
        })
    }
}

/// Lemmas of a transcript's content tokens, in text order.
pub fn transcript_words(t: &Transcript) -> Vec<&str> {
    t.sentences.iter().flat_map(|s| &s.tokens).filter(|tok| tok.is_content()).map(|tok| tok.lemma.as_str()).collect()
}

/// Seed for one transcript's null model, independent of processing order.
pub fn transcript_seed(global: u64, transcript_id: &str) -> u64 {
    crate::rng::derive(global, crate::rng::hash_str(transcript_id))
}

/// Profile a transcript's content words.
pub fn profile_transcript(
    t: &Transcript,
    lex: &EmotionLexicon,
    n_samples: usize,
    global_seed: u64,
    sampling: Sampling,
) -> Result<EmotionProfile, EmotionError> {
    EmotionProfile::compute(transcript_words(t), lex, n_samples, transcript_seed(global_seed, &t.transcript_id), sampling)
}

/// Profile the network neighbours of `node` (word-level analysis).
pub fn neighborhood_profile(
    g: &Tfmn,
    node: &str,
    lex: &EmotionLexicon,
    n_samples: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<EmotionProfile, EmotionError> {
    let neighbors: Vec<String> = g.neighbors(node).map(String::from).collect();
    EmotionProfile::compute(neighbors.iter().map(String::as_str), lex, n_samples, seed, sampling)
}
