use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use soundshift::analysis::{distance_series, per_dimension_analysis, per_dimension_differences, DimensionOptions, ReferenceMode};
use soundshift::change::{apply_change, ChangeRule, ClassMap, Schedule};
use soundshift::corpus::{
    bin_attestations, make_shuffle_control, tokenize, Attestation, BinSpec, Condition, TimeBinnedCorpus,
    TokenizationPolicy,
};
use soundshift::embedding::{count_tokens, ppmi, Basis, ContextPattern, EmbeddingMatrix, PpmiOptions};
use soundshift::stats::{ols_interaction, pearson, InteractionRow, TERMS};

fn word() -> impl Strategy<Value = String> {
    "[pbtdkgaeiou]{1,6}"
}

fn corpus_lists(min_bins: usize) -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec(word(), 1..12), min_bins..6)
}

fn sorted_pool(c: &TimeBinnedCorpus) -> Vec<String> {
    let mut v: Vec<String> = c.bins().iter().flat_map(|b| b.tokens.iter().cloned()).collect();
    v.sort();
    v
}

fn embed_bins(lists: &[Vec<String>], n: usize, basis: Option<Vec<ContextPattern>>) -> Vec<EmbeddingMatrix> {
    let counts: Vec<_> = lists
        .iter()
        .map(|l| count_tokens(l.iter().map(String::as_str), n).unwrap())
        .collect();
    let patterns = basis.unwrap_or_else(|| {
        Basis::new(counts.iter().flat_map(|c| c.contexts().cloned()))
            .patterns()
            .to_vec()
    });
    let basis = Arc::new(Basis::from_ordered(patterns));
    counts
        .iter()
        .map(|c| ppmi(c, &basis, &PpmiOptions::default()).unwrap())
        .collect()
}

/// Each bin contains both `p` and `b`.
fn paired_lists() -> impl Strategy<Value = Vec<Vec<String>>> {
    corpus_lists(3).prop_map(|mut lists| {
        for l in &mut lists {
            l.push("pa".into());
            l.push("ba".into());
        }
        lists
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shuffle_keeps_multiset_and_sizes(lists in corpus_lists(2), seed in any::<u64>()) {
        let c = TimeBinnedCorpus::from_token_lists(lists, Condition::Target).unwrap();
        let s = make_shuffle_control(&c, seed);
        prop_assert_eq!(s.bin_sizes(), c.bin_sizes());
        prop_assert_eq!(sorted_pool(&s), sorted_pool(&c));
        prop_assert_eq!(s.condition(), Condition::Control);
        let again = make_shuffle_control(&c, seed);
        prop_assert_eq!(again.bins(), s.bins());
    }

    #[test]
    fn tokenize_is_idempotent(text in "\\PC{0,60}") {
        let policy = TokenizationPolicy::default();
        let once = tokenize(&text, &policy);
        let twice = tokenize(&once.words.join(" "), &policy);
        prop_assert_eq!(twice.words, once.words);
        prop_assert_eq!(twice.dropped, 0);
    }

    #[test]
    fn ppmi_invariant_under_duplication(words in prop::collection::vec(word(), 1..15), n in 2usize..5) {
        let doubled: Vec<String> = words.iter().chain(&words).cloned().collect();
        let a = embed_bins(std::slice::from_ref(&words), n, None);
        let b = embed_bins(&[doubled], n, None);
        for c in a[0].characters() {
            let (x, y) = (a[0].vector(c).unwrap(), b[0].vector(c).unwrap());
            for (u, v) in x.iter().zip(y) {
                prop_assert!((u - v).abs() < 1e-12);
                prop_assert!(*u >= 0.0 && u.is_finite());
            }
        }
    }

    #[test]
    fn dimension_reports_ignore_basis_order(lists in paired_lists(), n in 2usize..4, seed in any::<u64>()) {
        let sorted = embed_bins(&lists, n, None);
        let mut perm = sorted[0].dimensions().to_vec();
        // deterministic shuffle from the seed
        let mut s = seed | 1;
        for i in (1..perm.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            perm.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let permuted = embed_bins(&lists, n, Some(perm));
        let opts = DimensionOptions { r_threshold: 1.1, p_threshold: 1.1, signed: false };
        let a = per_dimension_analysis(&sorted, 'p', 'b', &opts).unwrap();
        let b = per_dimension_analysis(&permuted, 'p', 'b', &opts).unwrap();
        let key = |r: &soundshift::DimensionReport| (r.pattern.to_string(), r.slope.to_bits(), r.pearson_r.to_bits());
        let sa: std::collections::BTreeSet<_> = a.reports.iter().map(key).collect();
        let sb: std::collections::BTreeSet<_> = b.reports.iter().map(key).collect();
        prop_assert_eq!(sa, sb);
        prop_assert_eq!(a.flat.len(), b.flat.len());
    }

    #[test]
    fn squared_distance_is_sum_of_squared_differences(lists in paired_lists(), n in 2usize..4) {
        let m = embed_bins(&lists, n, None);
        let d = distance_series(&m, 'p', 'b', ReferenceMode::Frozen).unwrap();
        let diffs = per_dimension_differences(&m, 'p', 'b').unwrap();
        for (di, row) in d.iter().zip(&diffs) {
            let s: f64 = row.iter().map(|x| x * x).sum();
            prop_assert!((di * di - s).abs() <= 8.0 * f64::EPSILON * s.max(1.0));
        }
    }

    #[test]
    fn distance_is_symmetric_and_zero_on_self(lists in paired_lists(), n in 2usize..4) {
        let m = embed_bins(&lists, n, None);
        let self_d = distance_series(&m, 'p', 'p', ReferenceMode::Frozen).unwrap();
        prop_assert_eq!(self_d[0], 0.0);
        let (p, b) = (m[0].vector('p').unwrap(), m[0].vector('b').unwrap());
        prop_assert_eq!(soundshift::analysis::euclidean(p, b), soundshift::analysis::euclidean(b, p));
    }

    #[test]
    fn ols_residuals_orthogonal_and_scale_free(
        ys in prop::collection::vec(-50.0f64..50.0, 20),
        scale in 0.01f64..100.0,
    ) {
        let rows: Vec<InteractionRow> = ys.iter().enumerate().map(|(i, &y)| InteractionRow {
            bin: (i % 5 + 1) as f64,
            is_control: i >= 10,
            distance: y,
        }).collect();
        let fit = ols_interaction(&rows).unwrap();
        let size = ys.iter().map(|y| y.abs()).fold(1.0, f64::max);
        for col in 0..4 {
            let dot: f64 = rows.iter().zip(&fit.residuals).map(|(r, e)| {
                let c = if r.is_control { 1.0 } else { 0.0 };
                [1.0, r.bin, c, r.bin * c][col] * e
            }).sum();
            prop_assert!(dot.abs() < 1e-8 * size * 25.0, "column {} dot {}", col, dot);
        }
        let scaled: Vec<InteractionRow> = rows.iter().map(|r| InteractionRow { distance: r.distance * scale, ..*r }).collect();
        let fit2 = ols_interaction(&scaled).unwrap();
        for t in TERMS {
            let (a, b) = (fit.term(t).unwrap(), fit2.term(t).unwrap());
            prop_assert!((b.estimate - a.estimate * scale).abs() <= 1e-9 * (1.0 + (a.estimate * scale).abs()));
            prop_assert!((b.t_value - a.t_value).abs() <= 1e-7 * (1.0 + a.t_value.abs()));
            prop_assert!((b.p_value - a.p_value).abs() <= 1e-9);
        }
    }

    #[test]
    fn pearson_of_affine_map(xs in prop::collection::vec(-100.0f64..100.0, 3..30), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        prop_assume!(spread > 1e-3 && a.abs() > 1e-3);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let r = pearson(&xs, &ys).unwrap().r;
        prop_assert!((r - a.signum()).abs() < 1e-12, "{}", r);
    }

    #[test]
    fn change_preserves_counts_and_lengths(lists in corpus_lists(2), seed in any::<u64>(), p in 0.0f64..=1.0) {
        let c = TimeBinnedCorpus::from_token_lists(lists, Condition::Target).unwrap();
        let rule = ChangeRule::parse("p > b / _ {i,u}", &ClassMap::with_vowels("ieuoa", None)).unwrap();
        let sched = Schedule::new(vec![p; c.n_bins()]).unwrap();
        let out = apply_change(&c, &rule, &sched, seed).unwrap();
        prop_assert_eq!(out.bin_sizes(), c.bin_sizes());
        for (a, b) in c.bins().iter().zip(out.bins()) {
            for (x, y) in a.tokens.iter().zip(&b.tokens) {
                prop_assert_eq!(x.chars().count(), y.chars().count());
                for (u, v) in x.chars().zip(y.chars()) {
                    prop_assert!(u == v || (u == 'p' && v == 'b'));
                }
            }
        }
        let zero = apply_change(&c, &rule, &Schedule::zeros(c.n_bins()), seed).unwrap();
        prop_assert_eq!(zero.bins(), c.bins());
    }

    #[test]
    fn binning_is_total(years in prop::collection::vec(1000i32..2000, 1..50), start in 1100i32..1600, width in 1i32..100, n_bins in 2usize..12) {
        let atts: Vec<Attestation> = years.iter().map(|&y| Attestation { form: "ab".into(), year: y }).collect();
        let spec = BinSpec::new(start, width, n_bins);
        match bin_attestations(&atts, &spec) {
            Ok((corpus, report)) => {
                prop_assert_eq!(corpus.total_tokens() + report.dropped_early + report.dropped_late, atts.len());
                prop_assert_eq!(corpus.n_bins(), n_bins);
            }
            Err(_) => prop_assert!(years.iter().all(|&y| spec.assign(y).is_err())),
        }
    }
}

#[test]
fn attestation_binning_example() {
    let atts: Vec<Attestation> = [1250, 1310, 1360, 1710]
        .iter()
        .map(|&year| Attestation { form: "x".into(), year })
        .collect();
    let spec = BinSpec::new(1300, 50, 9);
    let bins: Vec<usize> = atts.iter().map(|a| spec.assign(a.year).unwrap()).collect();
    assert_eq!(bins, [1, 1, 2, 9]);
    let (corpus, report) = bin_attestations(&atts, &spec).unwrap();
    assert_eq!(corpus.bin_sizes(), [2, 1, 0, 0, 0, 0, 0, 0, 1]);
    assert_eq!(report.folded_early, 1);
}

#[test]
fn shuffle_mixes_two_bins() {
    let lists = vec![vec!["pa".to_string(); 100], vec!["ba".to_string(); 100]];
    let c = TimeBinnedCorpus::from_token_lists(lists, Condition::Target).unwrap();
    let s = make_shuffle_control(&c, 42);
    let pa_in_first = s.bins()[0].tokens.iter().filter(|t| *t == "pa").count();
    let pa_total: usize = s.bins().iter().map(|b| b.tokens.iter().filter(|t| *t == "pa").count()).sum();
    assert_eq!(pa_total, 100);
    // hypergeometric sd ~3.5
    assert!((35..=65).contains(&pa_in_first), "{pa_in_first}");
}

#[test]
fn one_converging_dimension_among_many() {
    // dimension x converges by 0.5 per bin, y is constant, z diverges
    let basis = Arc::new(Basis::new(["_x", "_y", "_z"].map(|p| ContextPattern::new(p).unwrap())));
    let mats: Vec<EmbeddingMatrix> = (0..4)
        .map(|i| {
            let i = i as f64;
            let mut v = BTreeMap::new();
            v.insert('a', vec![3.0, 1.0, 0.0]);
            v.insert('b', vec![1.0 + 0.5 * i, 2.0, 0.3 * i]);
            EmbeddingMatrix::from_parts(2, basis.clone(), v).unwrap()
        })
        .collect();
    let out = per_dimension_analysis(&mats, 'a', 'b', &DimensionOptions::default()).unwrap();
    assert_eq!(out.reports.len(), 1);
    assert_eq!(out.reports[0].pattern.as_str(), "_x");
    assert!((out.reports[0].slope + 0.5).abs() < 1e-12);
    assert_eq!(out.flat.len(), 1);
    assert_eq!(out.examined, 3);
}
