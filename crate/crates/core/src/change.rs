//! Context-conditioned sound change: rule notation, site matching and
//! scheduled application to a time-binned corpus.
//!
//! Rules are written `source > target / left _ right`. Contexts are
//! sequences of literals, capital-letter class names and `#` (word edge);
//! `{x,y,z}` is a disjunction whose alternatives may be several symbols
//! long, e.g. `g > k / V _ {V,#,t#}`.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{CorpusError, TimeBinnedCorpus, BOUNDARY};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("source and target are both {0:?}")]
    Identity(char),
}

#[derive(Debug, Error)]
pub enum ChangeError {
    #[error("schedule has {schedule} probabilities but the corpus has {bins} bins")]
    ScheduleLength { schedule: usize, bins: usize },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Named character classes usable in rule contexts, keyed by a capital letter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassMap {
    classes: BTreeMap<char, Vec<char>>,
}

impl ClassMap {
    pub fn new() -> Self {
        ClassMap::default()
    }

    /// `V` bound to `vowels` and, when given, `C` to `consonants`.
    pub fn with_vowels(vowels: &str, consonants: Option<&str>) -> Self {
        let mut m = ClassMap::new();
        m.insert('V', vowels.chars());
        if let Some(c) = consonants {
            m.insert('C', c.chars());
        }
        m
    }

    pub fn insert(&mut self, name: char, members: impl IntoIterator<Item = char>) {
        let mut members: Vec<char> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        self.classes.insert(name, members);
    }

    pub fn get(&self, name: char) -> Option<&[char]> {
        self.classes.get(&name).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &[char])> {
        self.classes.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Parses `V=aeiou` definitions.
    pub fn parse_definition(&mut self, def: &str) -> Result<(), String> {
        let (name, members) = def.split_once('=').ok_or_else(|| format!("expected NAME=members, got {def:?}"))?;
        let mut chars = name.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(n), None) if n.is_uppercase() => {
                let members: Vec<char> = members.trim().chars().filter(|c| *c != ',').collect();
                if members.is_empty() {
                    return Err(format!("class {n} has no members"));
                }
                self.insert(n, members);
                Ok(())
            }
            _ => Err(format!("class name must be a single capital letter, got {:?}", name.trim())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    Literal(char),
    Class { name: char, members: Vec<char> },
    Boundary,
}

impl Element {
    fn matches(&self, c: char) -> bool {
        match self {
            Element::Literal(l) => *l == c,
            Element::Class { members, .. } => members.contains(&c),
            Element::Boundary => c == BOUNDARY,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Literal(c) => write!(f, "{c}"),
            Element::Class { name, .. } => write!(f, "{name}"),
            Element::Boundary => write!(f, "#"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    One(Element),
    AnyOf(Vec<Vec<Element>>),
}

/// A context: items matched in sequence outward from the changing segment's
/// side (left contexts end right before it, right contexts start right
/// after it).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context {
    pub items: Vec<Item>,
}

impl Context {
    fn matches_forward(items: &[Item], seq: &[char], pos: usize) -> bool {
        let Some((first, rest)) = items.split_first() else {
            return true;
        };
        match first {
            Item::One(e) => pos < seq.len() && e.matches(seq[pos]) && Self::matches_forward(rest, seq, pos + 1),
            Item::AnyOf(alts) => alts.iter().any(|alt| {
                let end = pos + alt.len();
                end <= seq.len()
                    && alt.iter().zip(&seq[pos..end]).all(|(e, &c)| e.matches(c))
                    && Self::matches_forward(rest, seq, end)
            }),
        }
    }

    /// `end` is one past the last symbol the context may consume.
    fn matches_backward(items: &[Item], seq: &[char], end: usize) -> bool {
        let Some((last, rest)) = items.split_last() else {
            return true;
        };
        match last {
            Item::One(e) => end >= 1 && e.matches(seq[end - 1]) && Self::matches_backward(rest, seq, end - 1),
            Item::AnyOf(alts) => alts.iter().any(|alt| {
                end >= alt.len() && {
                    let start = end - alt.len();
                    alt.iter().zip(&seq[start..end]).all(|(e, &c)| e.matches(c)) && Self::matches_backward(rest, seq, start)
                }
            }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            match item {
                Item::One(e) => write!(f, "{e}")?,
                Item::AnyOf(alts) => {
                    f.write_str("{")?;
                    for (i, alt) in alts.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        for e in alt {
                            write!(f, "{e}")?;
                        }
                    }
                    f.write_str("}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRule {
    pub source: char,
    pub target: char,
    pub left: Context,
    pub right: Context,
}

impl fmt::Display for ChangeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} > {} / {}_{}", self.source, self.target, self.left, self.right)
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    classes: &'a ClassMap,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, RuleError> {
        Err(RuleError::Parse {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, options: &[char], what: &str) -> Result<(), RuleError> {
        match self.peek() {
            Some(c) if options.contains(&c) => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.err(format!("expected {what}, found {c:?}")),
            None => self.err(format!("expected {what}, found end of rule")),
        }
    }

    fn segment(&mut self, what: &str) -> Result<char, RuleError> {
        match self.peek() {
            Some(c) if is_segment(c) => {
                self.pos += 1;
                Ok(c)
            }
            Some(c) => self.err(format!("expected {what} segment, found {c:?}")),
            None => self.err(format!("expected {what} segment, found end of rule")),
        }
    }

    fn element(&mut self) -> Result<Element, RuleError> {
        let c = self.peek().expect("caller peeked");
        if c == BOUNDARY {
            self.pos += 1;
            return Ok(Element::Boundary);
        }
        if c.is_uppercase() {
            return match self.classes.get(c) {
                Some(members) => {
                    self.pos += 1;
                    Ok(Element::Class {
                        name: c,
                        members: members.to_vec(),
                    })
                }
                None => self.err(format!("unknown class {c:?}")),
            };
        }
        if is_segment(c) {
            self.pos += 1;
            return Ok(Element::Literal(c));
        }
        self.err(format!("unexpected {c:?}"))
    }

    /// Context up to (not including) one of `stop`, or end of input.
    fn context(&mut self, stop: &[char]) -> Result<Context, RuleError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                None => break,
                Some(c) if stop.contains(&c) => break,
                Some('{') => {
                    self.pos += 1;
                    let mut alts = Vec::new();
                    let mut current = Vec::new();
                    loop {
                        match self.peek() {
                            Some(',') | Some('}') => {
                                if current.is_empty() {
                                    return self.err("empty alternative");
                                }
                                alts.push(std::mem::take(&mut current));
                                let closing = self.peek() == Some('}');
                                self.pos += 1;
                                if closing {
                                    break;
                                }
                            }
                            Some('{') => return self.err("nested braces are not supported"),
                            Some('_') => return self.err("'_' inside braces"),
                            None => return self.err("unclosed '{'"),
                            Some(_) => current.push(self.element()?),
                        }
                    }
                    items.push(Item::AnyOf(alts));
                }
                Some('}') | Some(',') => return self.err("unbalanced braces"),
                Some(_) => items.push(Item::One(self.element()?)),
            }
        }
        Ok(Context { items })
    }
}

fn is_segment(c: char) -> bool {
    !c.is_whitespace() && !c.is_uppercase() && !"#{},_/>→".contains(c)
}

impl ChangeRule {
    pub fn parse(text: &str, classes: &ClassMap) -> Result<Self, RuleError> {
        Self::parse_line(text, 1, classes)
    }

    fn parse_line(text: &str, line: usize, classes: &ClassMap) -> Result<Self, RuleError> {
        let mut p = Parser {
            chars: text.chars().collect(),
            pos: 0,
            line,
            classes,
        };
        let source = p.segment("source")?;
        p.expect(&['>', '→'], "'>'")?;
        let target = p.segment("target")?;
        let (left, right) = if p.peek().is_none() {
            (Context::default(), Context::default())
        } else {
            p.expect(&['/'], "'/'")?;
            let left = p.context(&['_'])?;
            p.expect(&['_'], "'_'")?;
            let right = p.context(&[])?;
            (left, right)
        };
        if let Some(c) = p.peek() {
            return p.err(format!("trailing {c:?}"));
        }
        if source == target {
            return Err(RuleError::Identity(source));
        }
        Ok(ChangeRule {
            source,
            target,
            left,
            right,
        })
    }

    /// One rule per non-blank line; lines starting with `#` are comments.
    pub fn parse_file(text: &str, classes: &ClassMap) -> Result<Vec<Self>, RuleError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| Self::parse_line(l, i + 1, classes))
            .collect()
    }

    /// Positions (char indices) where the rule applies to `word`.
    pub fn match_sites(&self, word: &str) -> Vec<usize> {
        let mut padded = Vec::with_capacity(word.len() + 2);
        padded.push(BOUNDARY);
        padded.extend(word.chars());
        padded.push(BOUNDARY);
        let n = padded.len() - 2;
        (0..n)
            .filter(|&i| {
                let p = i + 1;
                padded[p] == self.source
                    && Context::matches_backward(&self.left.items, &padded, p)
                    && Context::matches_forward(&self.right.items, &padded, p + 1)
            })
            .collect()
    }

    /// Rewrites the given sites at once; sites are computed on the
    /// original word so a rewrite never feeds another in the same pass.
    pub fn rewrite(&self, word: &str, sites: &[usize]) -> String {
        word.chars()
            .enumerate()
            .map(|(i, c)| if sites.contains(&i) { self.target } else { c })
            .collect()
    }
}

/// Free function form of [`ChangeRule::match_sites`].
pub fn match_sites(word: &str, rule: &ChangeRule) -> Vec<usize> {
    rule.match_sites(word)
}

/// Per-bin application probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    probabilities: Vec<f64>,
}

impl Schedule {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, ChangeError> {
        if probabilities.is_empty() {
            return Err(ChangeError::Schedule("no probabilities".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ChangeError::Schedule(format!("probability {p} outside [0, 1]")));
        }
        Ok(Schedule { probabilities })
    }

    /// 0, 1/(n-1), ..., 1.
    pub fn linear(n_bins: usize) -> Result<Self, ChangeError> {
        if n_bins < 2 {
            return Err(ChangeError::Schedule("a linear schedule needs at least 2 bins".into()));
        }
        Schedule::new((0..n_bins).map(|i| i as f64 / (n_bins - 1) as f64).collect())
    }

    pub fn zeros(n_bins: usize) -> Self {
        Schedule {
            probabilities: vec![0.0; n_bins.max(1)],
        }
    }

    /// Comma-separated probabilities, e.g. `0,.25,.5,.75,1`.
    pub fn parse(text: &str) -> Result<Self, ChangeError> {
        let probs = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| ChangeError::Schedule(format!("not a number: {:?}", s.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Schedule::new(probs)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.probabilities.windows(2).all(|w| w[0] <= w[1])
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probabilities.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Applies `rule` to every token: in bin `j` each matched site rewrites
/// independently with probability `schedule[j]`. Bin `j` uses its own
/// random stream derived from `seed`.
pub fn apply_change(
    corpus: &TimeBinnedCorpus,
    rule: &ChangeRule,
    schedule: &Schedule,
    seed: u64,
) -> Result<TimeBinnedCorpus, ChangeError> {
    if schedule.len() != corpus.n_bins() {
        return Err(ChangeError::ScheduleLength {
            schedule: schedule.len(),
            bins: corpus.n_bins(),
        });
    }
    let mut alphabet = corpus.alphabet().clone();
    if !alphabet.contains(rule.target) {
        alphabet = alphabet.union(&crate::corpus::Alphabet::new([rule.target])?);
    }
    let out = corpus.map_tokens(alphabet, |bin| {
        let p = schedule.probabilities[bin.index - 1];
        let mut rng = seed::rng(seed::derive(seed, seed::Stage::Simulation, &[bin.index as u64]));
        bin.tokens
            .iter()
            .map(|token| {
                if p == 0.0 || !token.contains(rule.source) {
                    return token.clone();
                }
                let sites: Vec<usize> = rule
                    .match_sites(token)
                    .into_iter()
                    .filter(|_| rng.random_bool(p))
                    .collect();
                if sites.is_empty() {
                    token.clone()
                } else {
                    rule.rewrite(token, &sites)
                }
            })
            .collect()
    })?;
    Ok(out)
}
