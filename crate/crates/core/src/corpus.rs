//! Time-binned corpora: alphabet, bins of word tokens, ingestion from plain
//! text and dated attestation lists, and shuffle-based control corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Reserved word-edge symbol. Never part of a word.
pub const BOUNDARY: char = '#';

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("alphabet symbol {0:?} is duplicated")]
    DuplicateSymbol(char),
    #[error("the boundary symbol '#' cannot be part of the alphabet")]
    BoundaryInAlphabet,
    #[error("a corpus needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("bin indices must run 1, 2, ... in order; found {found} at position {position}")]
    BinIndex { position: usize, found: usize },
    #[error("bin {bin}: token {token:?} contains {symbol:?}, which is not in the alphabet")]
    ForeignSymbol { bin: usize, token: String, symbol: char },
    #[error("bin {0} contains an empty token")]
    EmptyToken(usize),
    #[error("bin width must be positive")]
    BinWidth,
    #[error("every bin is empty after binning ({dropped} attestations dropped)")]
    AllBinsEmpty { dropped: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no valid records")]
    NoRecords { path: String },
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
}

impl CorpusError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Ordered character inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self, CorpusError> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(CorpusError::EmptyAlphabet);
        }
        let mut seen = BTreeSet::new();
        for &c in &symbols {
            if c == BOUNDARY {
                return Err(CorpusError::BoundaryInAlphabet);
            }
            if !seen.insert(c) {
                return Err(CorpusError::DuplicateSymbol(c));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Sorted set of all characters used by `tokens`.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self, CorpusError> {
        let set: BTreeSet<char> = tokens.into_iter().flat_map(str::chars).collect();
        Alphabet::new(set)
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn contains(&self, c: char) -> bool {
        self.symbols.contains(&c)
    }

    pub fn boundary(&self) -> char {
        BOUNDARY
    }

    /// Union of two alphabets, keeping the order of `self` first.
    pub fn union(&self, other: &Alphabet) -> Alphabet {
        let mut symbols = self.symbols.clone();
        for &c in &other.symbols {
            if !symbols.contains(&c) {
                symbols.push(c);
            }
        }
        Alphabet { symbols }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.symbols {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Which side of the target/control comparison a corpus belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Target,
    Control,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Target => "target",
            Condition::Control => "control",
        }
    }

    pub fn is_control(self) -> bool {
        self == Condition::Control
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "target" => Ok(Condition::Target),
            "control" => Ok(Condition::Control),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

/// One temporal slice: a multiset of word tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeBin {
    pub index: usize,
    pub label: String,
    pub tokens: Vec<String>,
}

impl TimeBin {
    pub fn new(index: usize, label: impl Into<String>, tokens: Vec<String>) -> Self {
        TimeBin {
            index,
            label: label.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeBinnedCorpus {
    alphabet: Alphabet,
    bins: Vec<TimeBin>,
    condition: Condition,
}

impl TimeBinnedCorpus {
    pub fn new(alphabet: Alphabet, bins: Vec<TimeBin>, condition: Condition) -> Result<Self, CorpusError> {
        if bins.len() < 2 {
            return Err(CorpusError::TooFewBins(bins.len()));
        }
        for (position, bin) in bins.iter().enumerate() {
            if bin.index != position + 1 {
                return Err(CorpusError::BinIndex {
                    position,
                    found: bin.index,
                });
            }
            for token in &bin.tokens {
                if token.is_empty() {
                    return Err(CorpusError::EmptyToken(bin.index));
                }
                if let Some(symbol) = token.chars().find(|&c| !alphabet.contains(c)) {
                    return Err(CorpusError::ForeignSymbol {
                        bin: bin.index,
                        token: token.clone(),
                        symbol,
                    });
                }
            }
        }
        Ok(TimeBinnedCorpus {
            alphabet,
            bins,
            condition,
        })
    }

    /// Builds bins 1..=n from token lists, inferring the alphabet.
    pub fn from_token_lists(lists: Vec<Vec<String>>, condition: Condition) -> Result<Self, CorpusError> {
        let alphabet = Alphabet::from_tokens(lists.iter().flatten().map(String::as_str))?;
        let bins = lists
            .into_iter()
            .enumerate()
            .map(|(i, tokens)| TimeBin::new(i + 1, format!("bin {}", i + 1), tokens))
            .collect();
        TimeBinnedCorpus::new(alphabet, bins, condition)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn bins(&self) -> &[TimeBin] {
        &self.bins
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn bin_sizes(&self) -> Vec<usize> {
        self.bins.iter().map(TimeBin::len).collect()
    }

    pub fn total_tokens(&self) -> usize {
        self.bins.iter().map(TimeBin::len).sum()
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }

    /// Replaces the token lists bin by bin; used by transformations that
    /// keep the bin structure (sound change, resampling).
    pub(crate) fn map_tokens(&self, alphabet: Alphabet, f: impl Fn(&TimeBin) -> Vec<String>) -> Result<Self, CorpusError> {
        let bins = self
            .bins
            .iter()
            .map(|b| TimeBin::new(b.index, b.label.clone(), f(b)))
            .collect();
        TimeBinnedCorpus::new(alphabet, bins, self.condition)
    }

    /// Resamples every bin with replacement, keeping bin sizes.
    pub fn bootstrap(&self, seed: u64) -> TimeBinnedCorpus {
        use rand::Rng;
        let bins = self
            .bins
            .iter()
            .map(|b| {
                let mut rng = seed::rng(seed::derive(seed, seed::Stage::Bootstrap, &[b.index as u64]));
                let tokens = if b.tokens.is_empty() {
                    Vec::new()
                } else {
                    (0..b.tokens.len())
                        .map(|_| b.tokens[rng.random_range(0..b.tokens.len())].clone())
                        .collect()
                };
                TimeBin::new(b.index, b.label.clone(), tokens)
            })
            .collect();
        TimeBinnedCorpus {
            alphabet: self.alphabet.clone(),
            bins,
            condition: self.condition,
        }
    }
}

/// Normalization rules applied by [`tokenize`].
#[derive(Debug, Clone)]
pub struct TokenizationPolicy {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub strip_digits: bool,
    /// Further characters removed from every word.
    pub strip_chars: Vec<char>,
    /// When set, words with characters outside the alphabet are dropped.
    pub alphabet: Option<Alphabet>,
}

impl Default for TokenizationPolicy {
    fn default() -> Self {
        TokenizationPolicy {
            lowercase: true,
            strip_punctuation: true,
            strip_digits: true,
            strip_chars: Vec::new(),
            alphabet: None,
        }
    }
}

impl TokenizationPolicy {
    fn strips(&self, c: char) -> bool {
        (self.strip_punctuation && c != BOUNDARY && !c.is_alphanumeric())
            || (self.strip_digits && c.is_numeric())
            || self.strip_chars.contains(&c)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenized {
    pub words: Vec<String>,
    /// Words discarded because they contained characters outside the
    /// alphabet (or the boundary symbol).
    pub dropped: usize,
}

/// Splits on whitespace and normalizes each word. Words that still contain
/// foreign characters after normalization are dropped, not rewritten.
pub fn tokenize(raw_text: &str, policy: &TokenizationPolicy) -> Tokenized {
    let mut out = Tokenized::default();
    for piece in raw_text.split_whitespace() {
        let cased = if policy.lowercase { piece.to_lowercase() } else { piece.to_string() };
        let word: String = cased.chars().filter(|&c| !policy.strips(c)).collect();
        if word.is_empty() {
            continue;
        }
        let foreign = word.chars().any(|c| {
            c == BOUNDARY || c.is_whitespace() || policy.alphabet.as_ref().is_some_and(|a| !a.contains(c))
        });
        if foreign {
            out.dropped += 1;
        } else {
            out.words.push(word);
        }
    }
    out
}

/// A dated spelling of a name or word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attestation {
    pub form: String,
    pub year: i32,
}

/// How years are mapped to bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    pub start_year: i32,
    pub bin_width_years: i32,
    pub n_bins: usize,
    /// Years before `start_year` go to bin 1 (the reference period) instead
    /// of being dropped.
    #[serde(default = "default_true")]
    pub fold_early_into_first: bool,
}

fn default_true() -> bool {
    true
}

impl BinSpec {
    pub fn new(start_year: i32, bin_width_years: i32, n_bins: usize) -> Self {
        BinSpec {
            start_year,
            bin_width_years,
            n_bins,
            fold_early_into_first: true,
        }
    }

    /// Bin index (1-based) for a year, or the reason it is dropped.
    pub fn assign(&self, year: i32) -> Result<usize, DropReason> {
        if year < self.start_year {
            return if self.fold_early_into_first {
                Ok(1)
            } else {
                Err(DropReason::BeforeRange)
            };
        }
        let offset = (year - self.start_year).div_euclid(self.bin_width_years) as usize;
        let index = offset + 1;
        if index > self.n_bins {
            Err(DropReason::AfterRange)
        } else {
            Ok(index)
        }
    }

    fn label(&self, index: usize) -> String {
        let lo = self.start_year + (index as i32 - 1) * self.bin_width_years;
        let hi = lo + self.bin_width_years - 1;
        if index == 1 && self.fold_early_into_first {
            format!("..{hi}")
        } else {
            format!("{lo}\u{2013}{hi}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    BeforeRange,
    AfterRange,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinningReport {
    pub folded_early: usize,
    pub dropped_early: usize,
    pub dropped_late: usize,
}

/// Sorts attestations into fixed-width year bins.
pub fn bin_attestations(
    attestations: &[Attestation],
    spec: &BinSpec,
) -> Result<(TimeBinnedCorpus, BinningReport), CorpusError> {
    if spec.bin_width_years <= 0 {
        return Err(CorpusError::BinWidth);
    }
    if spec.n_bins < 2 {
        return Err(CorpusError::TooFewBins(spec.n_bins));
    }
    let mut report = BinningReport::default();
    let mut lists: Vec<Vec<String>> = vec![Vec::new(); spec.n_bins];
    for a in attestations {
        match spec.assign(a.year) {
            Ok(index) => {
                if a.year < spec.start_year {
                    report.folded_early += 1;
                }
                lists[index - 1].push(a.form.clone());
            }
            Err(DropReason::BeforeRange) => report.dropped_early += 1,
            Err(DropReason::AfterRange) => report.dropped_late += 1,
        }
    }
    if lists.iter().all(Vec::is_empty) {
        return Err(CorpusError::AllBinsEmpty {
            dropped: report.dropped_early + report.dropped_late,
        });
    }
    let alphabet = Alphabet::from_tokens(lists.iter().flatten().map(String::as_str))?;
    let bins = lists
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| TimeBin::new(i + 1, spec.label(i + 1), tokens))
        .collect();
    Ok((TimeBinnedCorpus::new(alphabet, bins, Condition::Target)?, report))
}

/// Pools every token and deals them back out at random, each bin receiving
/// as many tokens as it had. Temporal order is destroyed; word-internal
/// structure and bin sizes are kept.
pub fn make_shuffle_control(corpus: &TimeBinnedCorpus, seed: u64) -> TimeBinnedCorpus {
    let mut pool: Vec<String> = corpus.bins.iter().flat_map(|b| b.tokens.iter().cloned()).collect();
    let mut rng = seed::rng(seed::derive(seed, seed::Stage::Shuffle, &[]));
    pool.shuffle(&mut rng);
    let mut pool = pool.into_iter();
    let bins = corpus
        .bins
        .iter()
        .map(|b| TimeBin::new(b.index, b.label.clone(), pool.by_ref().take(b.tokens.len()).collect()))
        .collect();
    TimeBinnedCorpus {
        alphabet: corpus.alphabet.clone(),
        bins,
        condition: Condition::Control,
    }
}

/// A skipped input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationTable {
    pub records: Vec<Attestation>,
    pub warnings: Vec<LineWarning>,
}

/// Parses `year<TAB>form` records. `#` lines and blank lines are ignored;
/// malformed lines become warnings.
pub fn parse_attestation_table(text: &str, source_name: &str) -> Result<AttestationTable, CorpusError> {
    let policy = TokenizationPolicy::default();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((year, form)) = trimmed.split_once('\t') else {
            warnings.push(LineWarning {
                line: line_no,
                message: "expected year<TAB>form".into(),
            });
            continue;
        };
        let year: i32 = match year.trim().parse() {
            Ok(y) => y,
            Err(_) => {
                warnings.push(LineWarning {
                    line: line_no,
                    message: format!("unparseable year {:?}", year.trim()),
                });
                continue;
            }
        };
        let words = tokenize(form, &policy).words;
        if words.len() != 1 {
            warnings.push(LineWarning {
                line: line_no,
                message: format!("form {:?} does not normalize to a single word", form.trim()),
            });
            continue;
        }
        records.push(Attestation {
            form: words.into_iter().next().unwrap(),
            year,
        });
    }
    if records.is_empty() {
        return Err(CorpusError::NoRecords {
            path: source_name.to_string(),
        });
    }
    Ok(AttestationTable { records, warnings })
}

pub fn load_attestation_table(path: impl AsRef<Path>) -> Result<AttestationTable, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_attestation_table(&text, &path.display().to_string())
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: TimeBinnedCorpus,
    pub dropped_words: usize,
}

/// Loads a corpus described by a manifest of `bin_index<TAB>path[<TAB>label]`
/// lines. Paths are relative to the manifest. Several files may feed the
/// same bin; every line of every file is tokenized.
pub fn load_plain_corpus(
    manifest: impl AsRef<Path>,
    policy: &TokenizationPolicy,
    condition: Condition,
) -> Result<LoadedCorpus, CorpusError> {
    let manifest = manifest.as_ref();
    let text = fs::read_to_string(manifest).map_err(|e| CorpusError::io(manifest, e))?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let manifest_name = manifest.display().to_string();
    let mut bins: BTreeMap<usize, (Option<String>, Vec<String>)> = BTreeMap::new();
    let mut dropped = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let index = fields.next().unwrap_or("");
        let (Ok(index), Some(file)) = (index.trim().parse::<usize>(), fields.next()) else {
            return Err(CorpusError::Manifest {
                path: manifest_name,
                line: i + 1,
                message: "expected bin_index<TAB>path".into(),
            });
        };
        let label = fields.next().map(|s| s.trim().to_string());
        let file_path = base.join(file.trim());
        let content = fs::read_to_string(&file_path).map_err(|e| CorpusError::io(&file_path, e))?;
        let tokenized = tokenize(&content, policy);
        dropped += tokenized.dropped;
        let entry = bins.entry(index).or_default();
        if entry.0.is_none() {
            entry.0 = label;
        }
        entry.1.extend(tokenized.words);
    }
    for (position, &index) in bins.keys().enumerate() {
        if index != position + 1 {
            return Err(CorpusError::Manifest {
                path: manifest_name,
                line: 0,
                message: format!("bin indices must be 1..n without gaps; bin {} is missing", position + 1),
            });
        }
    }
    let alphabet = match &policy.alphabet {
        Some(a) => a.clone(),
        None => Alphabet::from_tokens(bins.values().flat_map(|(_, t)| t.iter().map(String::as_str)))?,
    };
    let bins = bins
        .into_iter()
        .map(|(index, (label, tokens))| TimeBin::new(index, label.unwrap_or_else(|| format!("bin {index}")), tokens))
        .collect();
    Ok(LoadedCorpus {
        corpus: TimeBinnedCorpus::new(alphabet, bins, condition)?,
        dropped_words: dropped,
    })
}

/// Writes one token per line per bin plus `manifest.tsv` into `dir`, and
/// returns the manifest path.
pub fn write_plain_corpus(corpus: &TimeBinnedCorpus, dir: impl AsRef<Path>) -> Result<PathBuf, CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let width = corpus.n_bins().to_string().len().max(2);
    let mut manifest = String::new();
    for bin in corpus.bins() {
        let name = format!("bin_{:0width$}.txt", bin.index);
        let mut body = String::with_capacity(bin.tokens.iter().map(|t| t.len() + 1).sum());
        for t in &bin.tokens {
            body.push_str(t);
            body.push('\n');
        }
        write_atomic(&dir.join(&name), body.as_bytes())?;
        manifest.push_str(&format!("{}\t{}\t{}\n", bin.index, name, bin.label));
    }
    let manifest_path = dir.join("manifest.tsv");
    write_atomic(&manifest_path, manifest.as_bytes())?;
    Ok(manifest_path)
}

/// Write-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(bytes)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        let p = TokenizationPolicy::default();
        assert_eq!(tokenize("Ba du", &p).words, words(&["ba", "du"]));
        assert!(tokenize("", &p).words.is_empty());
        assert_eq!(tokenize("Kiøpnehaffn, 1388", &p).words, words(&["kiøpnehaffn"]));
    }

    #[test]
    fn tokenize_drops_foreign_words_and_counts_them() {
        let p = TokenizationPolicy {
            alphabet: Some(Alphabet::new("abdu".chars()).unwrap()),
            ..Default::default()
        };
        let t = tokenize("ba du xa", &p);
        assert_eq!(t.words, words(&["ba", "du"]));
        assert_eq!(t.dropped, 1);
        let t = tokenize("a#b", &TokenizationPolicy::default());
        assert!(t.words.is_empty());
        assert_eq!(t.dropped, 1);
    }

    #[test]
    fn tokenize_keeps_case_when_asked() {
        let p = TokenizationPolicy {
            lowercase: false,
            ..Default::default()
        };
        assert_eq!(tokenize("Ba", &p).words, words(&["Ba"]));
    }

    #[test]
    fn alphabet_rejects_boundary_and_duplicates() {
        assert!(matches!(Alphabet::new("a#".chars()), Err(CorpusError::BoundaryInAlphabet)));
        assert!(matches!(Alphabet::new("aa".chars()), Err(CorpusError::DuplicateSymbol('a'))));
        assert!(matches!(Alphabet::new("".chars()), Err(CorpusError::EmptyAlphabet)));
    }

    #[test]
    fn corpus_invariants() {
        let a = Alphabet::new("ab".chars()).unwrap();
        let one = vec![TimeBin::new(1, "x", words(&["ab"]))];
        assert!(matches!(
            TimeBinnedCorpus::new(a.clone(), one, Condition::Target),
            Err(CorpusError::TooFewBins(1))
        ));
        let gap = vec![TimeBin::new(1, "x", vec![]), TimeBin::new(3, "y", vec![])];
        assert!(matches!(
            TimeBinnedCorpus::new(a.clone(), gap, Condition::Target),
            Err(CorpusError::BinIndex { position: 1, found: 3 })
        ));
        let foreign = vec![TimeBin::new(1, "x", words(&["ac"])), TimeBin::new(2, "y", vec![])];
        assert!(matches!(
            TimeBinnedCorpus::new(a, foreign, Condition::Target),
            Err(CorpusError::ForeignSymbol { symbol: 'c', .. })
        ));
    }

    #[test]
    fn binning_boundaries() {
        let spec = BinSpec::new(1300, 50, 11);
        assert_eq!(spec.assign(1247), Ok(1));
        assert_eq!(spec.assign(1300), Ok(1));
        assert_eq!(spec.assign(1349), Ok(1));
        assert_eq!(spec.assign(1350), Ok(2));
        assert_eq!(spec.assign(1849), Ok(11));
        assert_eq!(spec.assign(1850), Err(DropReason::AfterRange));
        let strict = BinSpec {
            fold_early_into_first: false,
            ..spec
        };
        assert_eq!(strict.assign(1247), Err(DropReason::BeforeRange));
    }

    #[test]
    fn binning_four_attestations() {
        let atts: Vec<Attestation> = [(1250, "a"), (1310, "b"), (1360, "c"), (1710, "d")]
            .iter()
            .map(|&(year, f)| Attestation { form: f.into(), year })
            .collect();
        let (corpus, report) = bin_attestations(&atts, &BinSpec::new(1300, 50, 9)).unwrap();
        let placed: Vec<usize> = ["a", "b", "c", "d"]
            .iter()
            .map(|f| corpus.bins().iter().find(|b| b.tokens.iter().any(|t| t == f)).unwrap().index)
            .collect();
        assert_eq!(placed, vec![1, 1, 2, 9]);
        assert_eq!(report.folded_early, 1);
        assert_eq!(corpus.bins()[1].label, "1350\u{2013}1399");
    }

    #[test]
    fn binning_all_empty_is_an_error() {
        let atts = vec![Attestation {
            form: "a".into(),
            year: 2000,
        }];
        assert!(matches!(
            bin_attestations(&atts, &BinSpec::new(1300, 50, 3)),
            Err(CorpusError::AllBinsEmpty { dropped: 1 })
        ));
        assert!(matches!(bin_attestations(&atts, &BinSpec::new(1300, 0, 3)), Err(CorpusError::BinWidth)));
    }

    #[test]
    fn attestation_table_parsing() {
        let text = "# comment\n1247\tKopmanahafn\nabc\tname\n1249\tkøpmannehafn\n1388\tKiøpnehaffn\n";
        let t = parse_attestation_table(text, "mem").unwrap();
        assert_eq!(t.records.len(), 3);
        assert_eq!(
            t.records[0],
            Attestation {
                form: "kopmanahafn".into(),
                year: 1247
            }
        );
        assert_eq!(t.warnings.len(), 1);
        assert_eq!(t.warnings[0].line, 3);
        assert!(matches!(
            parse_attestation_table("x\ty\n", "mem"),
            Err(CorpusError::NoRecords { .. })
        ));
    }

    #[test]
    fn shuffle_control_keeps_sizes() {
        let c = TimeBinnedCorpus::from_token_lists(
            vec![words(&["a", "b", "c"]), words(&["d", "e", "f", "g", "h"]), words(&["i", "j"])],
            Condition::Target,
        )
        .unwrap();
        let s = make_shuffle_control(&c, 3);
        assert_eq!(s.bin_sizes(), vec![3, 5, 2]);
        assert_eq!(s.condition(), Condition::Control);
        let mut a: Vec<_> = c.bins().iter().flat_map(|b| b.tokens.clone()).collect();
        let mut b: Vec<_> = s.bins().iter().flat_map(|b| b.tokens.clone()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(s, make_shuffle_control(&c, 3));
    }

    #[test]
    fn shuffle_control_mixes_two_populations() {
        let c = TimeBinnedCorpus::from_token_lists(vec![vec!["pa".to_string(); 100], vec!["ba".to_string(); 100]], Condition::Target)
            .unwrap();
        let s = make_shuffle_control(&c, 11);
        let pa_per_bin: Vec<usize> = s.bins().iter().map(|b| b.tokens.iter().filter(|t| *t == "pa").count()).collect();
        assert_eq!(pa_per_bin.iter().sum::<usize>(), 100);
        // Hypergeometric(200, 100, 100): sd 3.54, so 50 +/- 20 is far outside noise.
        assert!((30..=70).contains(&pa_per_bin[0]), "{pa_per_bin:?}");
    }
}
