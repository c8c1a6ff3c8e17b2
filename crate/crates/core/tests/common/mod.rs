//! Reference implementations used as test oracles. None of this calls into
//! the library's numeric code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

/// (character, pattern) -> count, enumerated straight from the window
/// definition over `#`-padded words.
pub fn brute_counts(words: &[&str], n: usize) -> BTreeMap<(char, String), u64> {
    let mut out = BTreeMap::new();
    for w in words {
        let mut padded: Vec<char> = vec!['#'; n - 1];
        padded.extend(w.chars());
        padded.extend(std::iter::repeat('#').take(n - 1));
        for start in 0..=padded.len() - n {
            for k in 0..n {
                let c = padded[start + k];
                if c == '#' {
                    continue;
                }
                let pattern: String = (0..n)
                    .map(|j| if j == k { '_' } else { padded[start + j] })
                    .collect();
                *out.entry((c, pattern)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// PPMI from the textbook formula, one cell at a time.
pub fn brute_ppmi(words: &[&str], n: usize) -> BTreeMap<(char, String), f64> {
    let counts = brute_counts(words, n);
    let total: u64 = counts.values().sum();
    let mut out = BTreeMap::new();
    for ((c, p), &joint) in &counts {
        let c_total: u64 = counts.iter().filter(|((c2, _), _)| c2 == c).map(|(_, v)| v).sum();
        let p_total: u64 = counts.iter().filter(|((_, p2), _)| p2 == p).map(|(_, v)| v).sum();
        let pmi = ((joint as f64 / total as f64) / ((c_total as f64 / total as f64) * (p_total as f64 / total as f64))).log2();
        out.insert((*c, p.clone()), pmi.max(0.0));
    }
    out
}

/// OLS through the normal equations and a Cholesky factorization.
/// Returns (estimates, standard errors, residual df).
pub fn ols_cholesky(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>, usize) {
    let n = x.len();
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let l = cholesky(&xtx);
    let beta = chol_solve(&l, &xty);
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum();
    let df = n - p;
    let s2 = rss / df as f64;
    let se = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            (chol_solve(&l, &e)[j] * s2).sqrt()
        })
        .collect();
    (beta, se, df)
}

fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = a.len();
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = l.len();
    let mut z = vec![0.0; p];
    for i in 0..p {
        z[i] = (b[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        x[i] = (z[i] - ((i + 1)..p).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Gamma((df+1)/2) / Gamma(df/2) by the half-integer recurrence.
fn gamma_ratio(df: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let (mut r, mut k) = if df % 2 == 1 { (1.0 / pi.sqrt(), 1) } else { (pi.sqrt() / 2.0, 2) };
    while k < df {
        r *= (k as f64 + 1.0) / k as f64;
        k += 2;
    }
    r
}

pub fn t_density(x: f64, df: u32) -> f64 {
    let v = df as f64;
    gamma_ratio(df) / (v * std::f64::consts::PI).sqrt() * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-sided Student-t tail probability by numerical integration of the density.
pub fn t_sf_quadrature(t: f64, df: u32) -> f64 {
    let t = t.abs();
    (1.0 - 2.0 * integrate(|x| t_density(x, df), 0.0, t, 1e-14)).max(0.0)
}

/// Standalone check of the Parupa phonotactics; `Err` names the violation.
pub fn parupa_violation(word: &str) -> Result<(), String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() || chars.len() % 2 != 0 {
        return Err(format!("{word}: length {} is not a positive even number", chars.len()));
    }
    for (i, pair) in chars.chunks(2).enumerate() {
        let (c, v) = (pair[0], pair[1]);
        if !"ptkbdgr".contains(c) {
            return Err(format!("{word}: syllable {i} does not start with a consonant"));
        }
        if !"ieuoa".contains(v) {
            return Err(format!("{word}: syllable {i} does not end in a vowel"));
        }
        if "ptk".contains(c) && !"iua".contains(v) {
            return Err(format!("{word}: {c} before {v}"));
        }
        if "bdg".contains(c) && !"eoa".contains(v) {
            return Err(format!("{word}: {c} before {v}"));
        }
    }
    if !"bp".contains(chars[0]) {
        return Err(format!("{word}: starts with {}", chars[0]));
    }
    Ok(())
}

/// Site oracle: a position matches when the `#`-prefixed text before it
/// ends with `left` and the `#`-suffixed text after it starts with `right`.
pub struct RegexRule {
    source: char,
    left: Regex,
    right: Regex,
}

impl RegexRule {
    pub fn new(source: char, left: &str, right: &str) -> Self {
        RegexRule {
            source,
            left: Regex::new(&format!("(?:{left})$")).unwrap(),
            right: Regex::new(&format!("^(?:{right})")).unwrap(),
        }
    }

    pub fn sites(&self, word: &str) -> Vec<usize> {
        let chars: Vec<char> = word.chars().collect();
        (0..chars.len())
            .filter(|&i| {
                if chars[i] != self.source {
                    return false;
                }
                let before: String = std::iter::once('#').chain(chars[..i].iter().copied()).collect();
                let after: String = chars[i + 1..].iter().copied().chain(std::iter::once('#')).collect();
                self.left.is_match(&before) && self.right.is_match(&after)
            })
            .collect()
    }
}

/// `p > b / _ {i,u}`
pub fn parupa_rule_oracle() -> RegexRule {
    RegexRule::new('p', "", "i|u")
}

/// `g > k / V _ {V,#,t#}` with Danish vowels.
pub fn danish_rule_oracle() -> RegexRule {
    RegexRule::new('g', "[aeiouyæøå]", "[aeiouyæøå]|#|t#")
}

/// A fixed 20-row `Distance ~ Bin * Corpus` table: bins 1..=5, both
/// conditions, two replicates each.
pub fn fixture_20() -> Vec<(f64, bool, f64)> {
    let target = [
        [4.91, 4.62, 4.05, 3.71, 3.02],
        [5.13, 4.44, 4.21, 3.48, 3.19],
    ];
    let control = [
        [4.87, 4.95, 4.79, 4.90, 4.71],
        [5.02, 4.81, 4.99, 4.76, 4.88],
    ];
    let mut rows = Vec::new();
    for (is_control, table) in [(false, target), (true, control)] {
        for rep in table {
            for (b, d) in rep.iter().enumerate() {
                rows.push(((b + 1) as f64, is_control, *d));
            }
        }
    }
    rows
}

/// Names drawn from Parupa, dated over 1200..1570; intervocalic k turns
/// into g with a probability rising over the 1300..1549 bins, p is untouched.
pub fn write_attestation_fixture(path: &std::path::Path) -> usize {
    let spec = soundshift::parupa::PhonotacticSpec::parupa();
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    let mut out = String::from("# year\tform\n");
    let mut valid = 0;
    for _ in 0..20_000 {
        let year: i32 = rng.random_range(1200..1570);
        let word = soundshift::parupa::generate_word(&spec, &mut rng).unwrap();
        let bin = ((year - 1300).max(0) / 50).min(4) as f64;
        let p = bin / 4.0;
        let chars: Vec<char> = word.chars().collect();
        let form: String = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let intervocalic = i > 0
                    && i + 1 < chars.len()
                    && "ieuoa".contains(chars[i - 1])
                    && "ieuoa".contains(chars[i + 1]);
                if c == 'k' && intervocalic && rng.random_bool(p) {
                    'g'
                } else {
                    c
                }
            })
            .collect();
        writeln!(out, "{year}\t{form}").unwrap();
        valid += 1;
    }
    out.push_str("undated\tpabi\n1400\t\n");
    std::fs::write(path, out).unwrap();
    valid
}

