//! Frequency-weighted word lists used to draw synchronic corpora.
//!
//! A bundled Danish list (every alphabetic form in
//! the CC BY-SA 4.0 wordfreq small list) stands in for a synchronic treebank when
//! simulating orthographic sound change.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::corpus::{Alphabet, Condition, CorpusError, LineWarning, TimeBin, TimeBinnedCorpus};
use crate::seed;

const DANISH: &str = include_str!("../data/danish_wordfreq.tsv");

/// Vowel letters of Danish orthography.
pub const DANISH_VOWELS: &str = "aeiouyæøå";

#[derive(Debug, Clone)]
pub struct Lexicon {
    words: Vec<String>,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl Lexicon {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self, CorpusError> {
        let (words, weights): (Vec<String>, Vec<f64>) = entries.into_iter().unzip();
        let sampler = WeightedIndex::new(weights.iter().copied()).map_err(|_| CorpusError::NoRecords {
            path: "word list".into(),
        })?;
        Ok(Lexicon { words, weights, sampler })
    }

    /// Parses `word<TAB>weight` lines; `#` lines are comments.
    pub fn parse(text: &str, source_name: &str) -> Result<(Self, Vec<LineWarning>), CorpusError> {
        let mut entries = Vec::new();
        let mut warnings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .split_once('\t')
                .and_then(|(w, f)| Some((w.trim(), f.trim().parse::<f64>().ok()?)))
                .filter(|(w, f)| !w.is_empty() && !w.contains(crate::corpus::BOUNDARY) && f.is_finite() && *f > 0.0);
            match parsed {
                Some((w, f)) => entries.push((w.to_lowercase(), f)),
                None => warnings.push(LineWarning {
                    line: i + 1,
                    message: "expected word<TAB>positive weight".into(),
                }),
            }
        }
        if entries.is_empty() {
            return Err(CorpusError::NoRecords {
                path: source_name.to_string(),
            });
        }
        Ok((Lexicon::new(entries)?, warnings))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<LineWarning>), CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Lexicon::parse(&text, &path.display().to_string())
    }

    pub fn danish() -> Self {
        Lexicon::parse(DANISH, "bundled Danish list").expect("bundled list parses").0
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.words.iter().map(String::as_str).zip(self.weights.iter().copied())
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::from_tokens(self.words.iter().map(String::as_str)).expect("non-empty lexicon")
    }

    /// `n_bins` bins of `tokens_per_bin` tokens drawn i.i.d. by weight.
    pub fn generate_corpus(&self, tokens_per_bin: usize, n_bins: usize, seed: u64) -> Result<TimeBinnedCorpus, CorpusError> {
        if n_bins < 2 {
            return Err(CorpusError::TooFewBins(n_bins));
        }
        let bins = (1..=n_bins)
            .map(|index| {
                let mut rng = seed::rng(seed::derive(seed, seed::Stage::Generation, &[index as u64]));
                let tokens = (0..tokens_per_bin)
                    .map(|_| self.words[self.sampler.sample(&mut rng)].clone())
                    .collect();
                TimeBin::new(index, format!("sample {index}"), tokens)
            })
            .collect();
        TimeBinnedCorpus::new(self.alphabet(), bins, Condition::Target)
    }
}
