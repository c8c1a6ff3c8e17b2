//! Directional character contexts, co-occurrence counting and PPMI
//! embeddings on a basis shared across bins.
//!
//! A context is a window of `n` symbols with the target character's slot
//! replaced by `_`, so `p_` (after p) and `_p` (before p) are different
//! dimensions. Words are padded with `n - 1` boundary symbols on each side.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Condition, TimeBin, BOUNDARY};

/// Marks the target character's position in a context pattern.
pub const SLOT: char = '_';

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("n-gram size must be at least 2, got {0}")]
    WindowSize(usize),
    #[error("invalid context pattern {0:?}")]
    Pattern(String),
    #[error("no co-occurrence mass to normalize")]
    Empty,
    #[error("mixed n-gram sizes: {0} and {1}")]
    MixedSizes(usize, usize),
    #[error("observed context {0:?} is missing from the basis")]
    UnknownContext(String),
    #[error("character {0:?} has no occurrences")]
    MissingCharacter(char),
    #[error("matrices do not share a basis")]
    BasisMismatch,
    #[error("malformed embedding table, line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A directional n-gram context, e.g. `vi_#`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextPattern(String);

impl ContextPattern {
    pub fn new(pattern: impl Into<String>) -> Result<Self, EmbeddingError> {
        let pattern = pattern.into();
        let slots = pattern.chars().filter(|&c| c == SLOT).count();
        if slots != 1 || pattern.chars().count() < 2 {
            return Err(EmbeddingError::Pattern(pattern));
        }
        Ok(ContextPattern(pattern))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the slot within the window.
    pub fn slot_position(&self) -> usize {
        self.0.chars().position(|c| c == SLOT).expect("validated pattern")
    }

    /// The symbols before and after the slot.
    pub fn sides(&self) -> (String, String) {
        let (l, r) = self.0.split_once(SLOT).expect("validated pattern");
        (l.to_string(), r.to_string())
    }
}

impl fmt::Display for ContextPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Every (character, context) pair of `word` for windows of size `n`.
pub fn extract_contexts(word: &str, n: usize) -> Result<Vec<(char, ContextPattern)>, EmbeddingError> {
    if n < 2 {
        return Err(EmbeddingError::WindowSize(n));
    }
    let mut out = Vec::new();
    for_each_context(word, n, |c, p| out.push((c, ContextPattern(p.to_string()))));
    Ok(out)
}

fn for_each_context(word: &str, n: usize, mut f: impl FnMut(char, &str)) {
    let mut padded: Vec<char> = Vec::with_capacity(word.len() + 2 * (n - 1));
    padded.extend(std::iter::repeat_n(BOUNDARY, n - 1));
    padded.extend(word.chars());
    padded.extend(std::iter::repeat_n(BOUNDARY, n - 1));
    let mut buf = String::with_capacity(4 * n);
    for window in padded.windows(n) {
        for (slot, &c) in window.iter().enumerate() {
            if c == BOUNDARY {
                continue;
            }
            buf.clear();
            for (j, &w) in window.iter().enumerate() {
                buf.push(if j == slot { SLOT } else { w });
            }
            f(c, &buf);
        }
    }
}

/// Joint and marginal counts of (character, context) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    n: usize,
    counts: HashMap<(char, ContextPattern), u64>,
    char_totals: BTreeMap<char, u64>,
    context_totals: HashMap<ContextPattern, u64>,
    grand_total: u64,
}

impl CooccurrenceCounts {
    pub fn new(n: usize) -> Result<Self, EmbeddingError> {
        if n < 2 {
            return Err(EmbeddingError::WindowSize(n));
        }
        Ok(CooccurrenceCounts {
            n,
            counts: HashMap::new(),
            char_totals: BTreeMap::new(),
            context_totals: HashMap::new(),
            grand_total: 0,
        })
    }

    pub fn add(&mut self, c: char, context: &str, weight: u64) {
        if weight == 0 {
            return;
        }
        let key = ContextPattern(context.to_string());
        *self.counts.entry((c, key.clone())).or_default() += weight;
        *self.char_totals.entry(c).or_default() += weight;
        *self.context_totals.entry(key).or_default() += weight;
        self.grand_total += weight;
    }

    /// Adds all contexts of `word`, `weight` times.
    pub fn add_word(&mut self, word: &str, weight: u64) {
        let n = self.n;
        let mut local: Vec<(char, String)> = Vec::new();
        for_each_context(word, n, |c, p| local.push((c, p.to_string())));
        for (c, p) in local {
            self.add(c, &p, weight);
        }
    }

    /// Associative, commutative merge.
    pub fn merge(&mut self, other: &CooccurrenceCounts) -> Result<(), EmbeddingError> {
        if other.n != self.n {
            return Err(EmbeddingError::MixedSizes(self.n, other.n));
        }
        for ((c, p), &w) in &other.counts {
            self.add(*c, p.as_str(), w);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, c: char, context: &str) -> u64 {
        self.counts
            .get(&(c, ContextPattern(context.to_string())))
            .copied()
            .unwrap_or(0)
    }

    pub fn char_total(&self, c: char) -> u64 {
        self.char_totals.get(&c).copied().unwrap_or(0)
    }

    pub fn context_total(&self, context: &str) -> u64 {
        self.context_totals
            .get(&ContextPattern(context.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    pub fn characters(&self) -> impl Iterator<Item = char> + '_ {
        self.char_totals.keys().copied()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ContextPattern> {
        self.context_totals.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &ContextPattern, u64)> {
        self.counts.iter().map(|((c, p), &w)| (*c, p, w))
    }
}

/// Sums contexts over every token of the bin. Identical tokens are counted
/// once and weighted by multiplicity.
pub fn count_bin(bin: &TimeBin, n: usize) -> Result<CooccurrenceCounts, EmbeddingError> {
    count_tokens(bin.tokens.iter().map(String::as_str), n)
}

pub fn count_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>, n: usize) -> Result<CooccurrenceCounts, EmbeddingError> {
    let mut types: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *types.entry(t).or_default() += 1;
    }
    let mut counts = CooccurrenceCounts::new(n)?;
    for (word, weight) in types {
        counts.add_word(word, weight);
    }
    Ok(counts)
}

/// Ordered set of context dimensions with O(1) lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    patterns: Vec<ContextPattern>,
    index: HashMap<ContextPattern, usize>,
}

impl Basis {
    pub fn new(patterns: impl IntoIterator<Item = ContextPattern>) -> Self {
        let patterns: Vec<ContextPattern> = patterns.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Self::from_ordered(patterns)
    }

    /// Keeps the given order (duplicates removed, first occurrence wins).
    pub fn from_ordered(patterns: Vec<ContextPattern>) -> Self {
        let mut index = HashMap::with_capacity(patterns.len());
        let mut kept = Vec::with_capacity(patterns.len());
        for p in patterns {
            if !index.contains_key(&p) {
                index.insert(p.clone(), kept.len());
                kept.push(p);
            }
        }
        Basis { patterns: kept, index }
    }

    pub fn patterns(&self) -> &[ContextPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn position(&self, pattern: &str) -> Option<usize> {
        self.index.get(&ContextPattern(pattern.to_string())).copied()
    }
}

/// PPMI normalization options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpmiOptions {
    /// Context-distribution smoothing exponent; 1.0 means none.
    pub context_alpha: f64,
}

impl Default for PpmiOptions {
    fn default() -> Self {
        PpmiOptions { context_alpha: 1.0 }
    }
}

/// Per-character PPMI vectors over a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    basis: Arc<Basis>,
    vectors: BTreeMap<char, Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn from_parts(n: usize, basis: Arc<Basis>, vectors: BTreeMap<char, Vec<f64>>) -> Result<Self, EmbeddingError> {
        if n < 2 {
            return Err(EmbeddingError::WindowSize(n));
        }
        if vectors.values().any(|v| v.len() != basis.len()) {
            return Err(EmbeddingError::BasisMismatch);
        }
        Ok(EmbeddingMatrix { n, basis, vectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dimensions(&self) -> &[ContextPattern] {
        self.basis.patterns()
    }

    pub fn characters(&self) -> impl Iterator<Item = char> + '_ {
        self.vectors.keys().copied()
    }

    pub fn vector(&self, c: char) -> Result<&[f64], EmbeddingError> {
        self.vectors
            .get(&c)
            .map(Vec::as_slice)
            .ok_or(EmbeddingError::MissingCharacter(c))
    }

    pub fn get(&self, c: char, pattern: &str) -> Option<f64> {
        let i = self.basis.position(pattern)?;
        self.vectors.get(&c).map(|v| v[i])
    }

    /// Entry-wise mean of matrices on one basis. A character missing from
    /// some matrices is averaged over the ones that have it.
    pub fn mean(matrices: &[&EmbeddingMatrix]) -> Result<EmbeddingMatrix, EmbeddingError> {
        let first = matrices.first().ok_or(EmbeddingError::Empty)?;
        let mut sums: BTreeMap<char, (Vec<f64>, usize)> = BTreeMap::new();
        for m in matrices {
            if m.n != first.n || (!Arc::ptr_eq(&m.basis, &first.basis) && m.basis != first.basis) {
                return Err(EmbeddingError::BasisMismatch);
            }
            for (&c, v) in &m.vectors {
                let entry = sums.entry(c).or_insert_with(|| (vec![0.0; v.len()], 0));
                for (s, x) in entry.0.iter_mut().zip(v) {
                    *s += x;
                }
                entry.1 += 1;
            }
        }
        let vectors = sums
            .into_iter()
            .map(|(c, (mut v, k))| {
                v.iter_mut().for_each(|x| *x /= k as f64);
                (c, v)
            })
            .collect();
        Ok(EmbeddingMatrix {
            n: first.n,
            basis: first.basis.clone(),
            vectors,
        })
    }

    /// Tab-separated table: header `char` + patterns, one row per character.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "char")?;
        for p in self.basis.patterns() {
            write!(w, "\t{p}")?;
        }
        writeln!(w)?;
        for (c, v) in &self.vectors {
            write!(w, "{c}")?;
            for x in v {
                write!(w, "\t{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<EmbeddingMatrix, EmbeddingError> {
        let table_err = |line: usize, message: &str| EmbeddingError::Table {
            line,
            message: message.to_string(),
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| table_err(1, "missing header"))??;
        let mut cols = header.split('\t');
        if cols.next() != Some("char") {
            return Err(table_err(1, "header must start with 'char'"));
        }
        let patterns = cols.map(ContextPattern::new).collect::<Result<Vec<_>, _>>()?;
        let n = patterns.first().map(ContextPattern::len).unwrap_or(2);
        if patterns.iter().any(|p| p.len() != n) {
            return Err(table_err(1, "patterns differ in length"));
        }
        let basis = Arc::new(Basis::from_ordered(patterns));
        let mut vectors = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut cells = line.split('\t');
            let mut cs = cells.next().unwrap_or("").chars();
            let (Some(c), None) = (cs.next(), cs.next()) else {
                return Err(table_err(i + 2, "first cell must be a single character"));
            };
            let values = cells
                .map(|x| x.parse::<f64>().map_err(|_| table_err(i + 2, "bad number")))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != basis.len() {
                return Err(table_err(i + 2, "row width differs from header"));
            }
            vectors.insert(c, values);
        }
        EmbeddingMatrix::from_parts(n, basis, vectors)
    }

    /// Writes `<stem>.tsv` and the `<stem>.json` sidecar.
    pub fn save(&self, stem: &Path, meta: &EmbeddingMeta) -> Result<(), crate::corpus::CorpusError> {
        let mut table = Vec::new();
        self.write_tsv(&mut table).expect("in-memory write");
        crate::corpus::write_atomic(&stem.with_extension("tsv"), &table)?;
        let json = serde_json::to_vec_pretty(meta).expect("meta serializes");
        crate::corpus::write_atomic(&stem.with_extension("json"), &json)
    }
}

/// JSON sidecar of a saved embedding table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub n: usize,
    pub bin_label: String,
    pub condition: Condition,
}

/// PPMI transform of `counts` onto `basis`:
/// `max(0, log2(count(c,x) * total / (total(c) * total(x))))`, zero for
/// unobserved pairs.
pub fn ppmi(counts: &CooccurrenceCounts, basis: &Arc<Basis>, options: &PpmiOptions) -> Result<EmbeddingMatrix, EmbeddingError> {
    if counts.grand_total == 0 {
        return Err(EmbeddingError::Empty);
    }
    let total = counts.grand_total as f64;
    let smoothed: Option<HashMap<&ContextPattern, f64>> = if options.context_alpha == 1.0 {
        None
    } else {
        let norm: f64 = counts.context_totals.values().map(|&x| (x as f64).powf(options.context_alpha)).sum();
        Some(
            counts
                .context_totals
                .iter()
                .map(|(p, &x)| (p, (x as f64).powf(options.context_alpha) / norm))
                .collect(),
        )
    };
    let mut vectors: BTreeMap<char, Vec<f64>> = counts.char_totals.keys().map(|&c| (c, vec![0.0; basis.len()])).collect();
    for ((c, pattern), &joint) in &counts.counts {
        let i = *basis
            .index
            .get(pattern)
            .ok_or_else(|| EmbeddingError::UnknownContext(pattern.0.clone()))?;
        let char_total = counts.char_totals[c] as f64;
        let pmi = match &smoothed {
            None => {
                let ctx_total = counts.context_totals[pattern] as f64;
                ((joint as f64 * total) / (char_total * ctx_total)).log2()
            }
            Some(p_ctx) => ((joint as f64 / total) / ((char_total / total) * p_ctx[pattern])).log2(),
        };
        vectors.get_mut(c).expect("char with mass")[i] = pmi.max(0.0);
    }
    EmbeddingMatrix::from_parts(counts.n, basis.clone(), vectors)
}

/// Builds the sorted union of all observed contexts and expresses every
/// count table as a PPMI matrix on it.
pub fn align_bins(
    per_bin_counts: &[CooccurrenceCounts],
    options: &PpmiOptions,
) -> Result<(Arc<Basis>, Vec<EmbeddingMatrix>), EmbeddingError> {
    let Some(first) = per_bin_counts.first() else {
        return Err(EmbeddingError::Empty);
    };
    if let Some(other) = per_bin_counts.iter().find(|c| c.n != first.n) {
        return Err(EmbeddingError::MixedSizes(first.n, other.n));
    }
    let basis = Arc::new(Basis::new(
        per_bin_counts.iter().flat_map(|c| c.context_totals.keys().cloned()),
    ));
    let matrices = per_bin_counts
        .iter()
        .map(|c| ppmi(c, &basis, options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((basis, matrices))
}
