//! Parupa, a toy language with CV syllables and a handful of phonotactic
//! restrictions, used as ground truth for simulated sound change.
//!
//! Words are sampled constraint-first: a syllable count from the configured
//! weights, then each onset uniformly from the consonants allowed in that
//! position, then each nucleus uniformly from the vowels allowed after that
//! onset.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Alphabet, Condition, CorpusError, TimeBin, TimeBinnedCorpus};
use crate::seed;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("invalid phonotactic spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Declarative phonotactics. Serialized as TOML:
///
/// ```toml
/// consonants = ["p", "t", "k", "b", "d", "g", "r"]
/// vowels = ["i", "e", "u", "o", "a"]
/// high_vowels = ["i", "u"]
/// non_high_vowels = ["e", "o"]
/// open_vowels = ["a"]
/// word_initial_consonants = ["b", "p"]
/// high_vowel_consonants = ["p", "t", "k"]
/// non_high_vowel_consonants = ["b", "d", "g"]
/// min_syllables = 1
/// max_syllables = 4
/// syllable_weights = [1.0, 1.0, 1.0, 1.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonotacticSpec {
    pub consonants: Vec<char>,
    pub vowels: Vec<char>,
    pub high_vowels: Vec<char>,
    pub non_high_vowels: Vec<char>,
    /// Vowels every consonant may precede.
    pub open_vowels: Vec<char>,
    pub word_initial_consonants: Vec<char>,
    /// Consonants restricted to high and open vowels.
    pub high_vowel_consonants: Vec<char>,
    /// Consonants restricted to non-high and open vowels.
    pub non_high_vowel_consonants: Vec<char>,
    pub min_syllables: usize,
    pub max_syllables: usize,
    /// One weight per length in `min_syllables..=max_syllables`; uniform
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllable_weights: Option<Vec<f64>>,
}

impl Default for PhonotacticSpec {
    fn default() -> Self {
        PhonotacticSpec::parupa()
    }
}

fn set(cs: &[char]) -> BTreeSet<char> {
    cs.iter().copied().collect()
}

impl PhonotacticSpec {
    pub fn parupa() -> Self {
        PhonotacticSpec {
            consonants: vec!['p', 't', 'k', 'b', 'd', 'g', 'r'],
            vowels: vec!['i', 'e', 'u', 'o', 'a'],
            high_vowels: vec!['i', 'u'],
            non_high_vowels: vec!['e', 'o'],
            open_vowels: vec!['a'],
            word_initial_consonants: vec!['b', 'p'],
            high_vowel_consonants: vec!['p', 't', 'k'],
            non_high_vowel_consonants: vec!['b', 'd', 'g'],
            min_syllables: 1,
            max_syllables: 4,
            syllable_weights: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SpecError> {
        let spec: PhonotacticSpec = toml::from_str(text).map_err(|e| SpecError::Invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpecError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        PhonotacticSpec::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |m: &str| Err(SpecError::Invalid(m.to_string()));
        let consonants = set(&self.consonants);
        let vowels = set(&self.vowels);
        if consonants.is_empty() || vowels.is_empty() {
            return bad("consonants and vowels must be non-empty");
        }
        if consonants.len() != self.consonants.len() || vowels.len() != self.vowels.len() {
            return bad("duplicate segment");
        }
        if !consonants.is_disjoint(&vowels) {
            return bad("a segment is both consonant and vowel");
        }
        let (high, non_high, open) = (set(&self.high_vowels), set(&self.non_high_vowels), set(&self.open_vowels));
        if !high.is_disjoint(&non_high) || !high.is_disjoint(&open) || !non_high.is_disjoint(&open) {
            return bad("vowel height classes overlap");
        }
        let union: BTreeSet<char> = high.union(&non_high).chain(open.iter()).copied().collect();
        if union != vowels {
            return bad("high, non-high and open vowels must partition the vowels");
        }
        let initial = set(&self.word_initial_consonants);
        if initial.is_empty() || !initial.is_subset(&consonants) {
            return bad("word-initial consonants must be a non-empty subset of the consonants");
        }
        let (hc, nc) = (set(&self.high_vowel_consonants), set(&self.non_high_vowel_consonants));
        if !hc.is_subset(&consonants) || !nc.is_subset(&consonants) || !hc.is_disjoint(&nc) {
            return bad("restricted consonant classes must be disjoint subsets of the consonants");
        }
        if open.is_empty() && (!hc.is_empty() && high.is_empty() || !nc.is_empty() && non_high.is_empty()) {
            return bad("some consonant has no permitted vowel");
        }
        if self.min_syllables == 0 || self.min_syllables > self.max_syllables {
            return bad("need 1 <= min_syllables <= max_syllables");
        }
        if let Some(w) = &self.syllable_weights {
            if w.len() != self.max_syllables - self.min_syllables + 1 {
                return bad("syllable_weights needs one weight per syllable count");
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return bad("syllable_weights must be non-negative with a positive sum");
            }
        }
        for &c in self.consonants.iter().chain(&self.vowels) {
            if c == crate::corpus::BOUNDARY {
                return bad("'#' is reserved for word boundaries");
            }
        }
        Ok(())
    }

    /// Vowels permitted directly after `consonant`.
    pub fn vowels_after(&self, consonant: char) -> Vec<char> {
        let allowed: BTreeSet<char> = if self.high_vowel_consonants.contains(&consonant) {
            self.high_vowels.iter().chain(&self.open_vowels).copied().collect()
        } else if self.non_high_vowel_consonants.contains(&consonant) {
            self.non_high_vowels.iter().chain(&self.open_vowels).copied().collect()
        } else {
            self.vowels.iter().copied().collect()
        };
        self.vowels.iter().copied().filter(|v| allowed.contains(v)).collect()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.consonants.iter().chain(&self.vowels).copied()).expect("validated spec")
    }
}

/// Compiled sampler for a validated spec.
#[derive(Debug, Clone)]
pub struct WordSampler {
    lengths: WeightedIndex<f64>,
    min_syllables: usize,
    initial: Vec<char>,
    consonants: Vec<char>,
    nuclei: Vec<(char, Vec<char>)>,
}

impl WordSampler {
    pub fn new(spec: &PhonotacticSpec) -> Result<Self, SpecError> {
        spec.validate()?;
        let span = spec.max_syllables - spec.min_syllables + 1;
        let weights = spec.syllable_weights.clone().unwrap_or_else(|| vec![1.0; span]);
        let lengths = WeightedIndex::new(weights).map_err(|e| SpecError::Invalid(e.to_string()))?;
        let nuclei = spec.consonants.iter().map(|&c| (c, spec.vowels_after(c))).collect();
        Ok(WordSampler {
            lengths,
            min_syllables: spec.min_syllables,
            initial: spec.word_initial_consonants.clone(),
            consonants: spec.consonants.clone(),
            nuclei,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let syllables = self.min_syllables + self.lengths.sample(rng);
        let mut word = String::with_capacity(2 * syllables);
        for s in 0..syllables {
            let pool = if s == 0 { &self.initial } else { &self.consonants };
            let onset = *pool.choose(rng).expect("non-empty consonant pool");
            let vowels = &self.nuclei.iter().find(|(c, _)| *c == onset).expect("known consonant").1;
            word.push(onset);
            word.push(*vowels.choose(rng).expect("validated spec"));
        }
        word
    }
}

/// One word satisfying every constraint in `spec`.
pub fn generate_word<R: Rng + ?Sized>(spec: &PhonotacticSpec, rng: &mut R) -> Result<String, SpecError> {
    Ok(WordSampler::new(spec)?.sample(rng))
}

/// `n_bins` bins of `n_words_per_bin` independent words each, all from the
/// same distribution. Bin `i` draws from its own seeded stream.
pub fn generate_corpus(
    spec: &PhonotacticSpec,
    n_words_per_bin: usize,
    n_bins: usize,
    seed: u64,
) -> Result<TimeBinnedCorpus, SpecError> {
    if n_words_per_bin == 0 {
        return Err(SpecError::Invalid("n_words_per_bin must be positive".into()));
    }
    if n_bins < 2 {
        return Err(CorpusError::TooFewBins(n_bins).into());
    }
    let sampler = WordSampler::new(spec)?;
    let bins = (1..=n_bins)
        .map(|index| {
            let mut rng = seed::rng(seed::derive(seed, seed::Stage::Generation, &[index as u64]));
            let tokens = (0..n_words_per_bin).map(|_| sampler.sample(&mut rng)).collect();
            TimeBin::new(index, format!("parupa {index}"), tokens)
        })
        .collect();
    Ok(TimeBinnedCorpus::new(spec.alphabet(), bins, Condition::Target)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid_and_round_trips() {
        let spec = PhonotacticSpec::parupa();
        spec.validate().unwrap();
        let back = PhonotacticSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn vowel_restrictions() {
        let spec = PhonotacticSpec::parupa();
        assert_eq!(spec.vowels_after('p'), vec!['i', 'u', 'a']);
        assert_eq!(spec.vowels_after('g'), vec!['e', 'o', 'a']);
        assert_eq!(spec.vowels_after('r'), vec!['i', 'e', 'u', 'o', 'a']);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = PhonotacticSpec::parupa();
        s.word_initial_consonants = vec!['x'];
        assert!(s.validate().is_err());
        let mut s = PhonotacticSpec::parupa();
        s.open_vowels = vec![];
        assert!(s.validate().is_err());
        let mut s = PhonotacticSpec::parupa();
        s.syllable_weights = Some(vec![1.0]);
        assert!(s.validate().is_err());
        assert!(PhonotacticSpec::from_toml_str("consonants = 3").is_err());
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let spec = PhonotacticSpec::parupa();
        let c = generate_corpus(&spec, 1, 2, 5).unwrap();
        assert_eq!(c.bin_sizes(), vec![1, 1]);
        let a = generate_corpus(&spec, 50, 3, 9).unwrap();
        assert_eq!(a, generate_corpus(&spec, 50, 3, 9).unwrap());
        assert_ne!(a, generate_corpus(&spec, 50, 3, 10).unwrap());
        assert!(generate_corpus(&spec, 0, 3, 1).is_err());
        assert!(generate_corpus(&spec, 5, 1, 1).is_err());
    }

    #[test]
    fn weighted_lengths() {
        let mut spec = PhonotacticSpec::parupa();
        spec.syllable_weights = Some(vec![0.0, 0.0, 1.0, 0.0]);
        let mut rng = seed::rng(1);
        for _ in 0..100 {
            assert_eq!(generate_word(&spec, &mut rng).unwrap().len(), 6);
        }
    }
}
