use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use soundshift::analysis::{
    indicates_change, run_experiment, CorpusGenerator, ExperimentSpec, LexiconGenerator, ParupaGenerator,
    ReferenceMode, ReplicateSource, Resampled, SimulatedChange,
};
use soundshift::change::apply_change;
use soundshift::corpus::{
    bin_attestations, load_attestation_table, load_plain_corpus, make_shuffle_control, write_atomic,
    write_plain_corpus, BinSpec, Condition, TimeBinnedCorpus, TokenizationPolicy,
};
use soundshift::embedding::{align_bins, count_bin, EmbeddingMeta, PpmiOptions};
use soundshift::lexicon::Lexicon;
use soundshift::report;
use soundshift::seed::{self, Stage};

use crate::config::{ChangeConfig, ExperimentConfig, Source};
use crate::{DimsArgs, EmbedArgs, ReportArgs, RunArgs, UsageError};

const CONFIG_FILE: &str = "config.toml";

fn abs(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn missing(flag: &str) -> anyhow::Error {
    UsageError(format!("missing --{flag}")).into()
}

/// Config file (if any) with every given flag applied on top.
pub fn merged(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let prev = cfg.source.take();
    let (prev_words, prev_bins) = match &prev {
        Some(Source::Parupa { words_per_bin, bins, .. }) => (Some(*words_per_bin), Some(*bins)),
        Some(Source::Wordlist { tokens_per_bin, bins, .. }) => (Some(*tokens_per_bin), Some(*bins)),
        Some(Source::Attestations { bins, .. }) => (None, Some(*bins)),
        _ => (None, None),
    };
    let words = args.words.or(prev_words);
    let bins = args.bins.or(prev_bins);

    cfg.source = if args.parupa {
        Some(Source::Parupa {
            spec: args.spec.as_deref().map(abs),
            words_per_bin: words.ok_or_else(|| missing("words"))?,
            bins: bins.ok_or_else(|| missing("bins"))?,
        })
    } else if args.danish || args.wordlist.is_some() {
        Some(Source::Wordlist {
            path: args.wordlist.as_deref().map(abs),
            tokens_per_bin: words.ok_or_else(|| missing("words"))?,
            bins: bins.ok_or_else(|| missing("bins"))?,
        })
    } else if let Some(target) = &args.target {
        Some(Source::Manifest {
            target: abs(target),
            control: args.control.as_deref().map(abs),
        })
    } else if let Some(dir) = &args.input {
        let control = dir.join("control").join("manifest.tsv");
        Some(Source::Manifest {
            target: abs(&dir.join("target").join("manifest.tsv")),
            control: control.exists().then(|| abs(&control)),
        })
    } else if let Some(path) = &args.attestations {
        let (prev_start, prev_width) = match &prev {
            Some(Source::Attestations {
                start_year, bin_width, ..
            }) => (Some(*start_year), Some(*bin_width)),
            _ => (None, None),
        };
        Some(Source::Attestations {
            path: abs(path),
            start_year: args.start_year.or(prev_start).ok_or_else(|| missing("start-year"))?,
            bin_width: args.bin_width.or(prev_width).ok_or_else(|| missing("bin-width"))?,
            bins: bins.ok_or_else(|| missing("bins"))?,
            fold_early: !args.drop_early,
        })
    } else {
        prev.map(|mut s| {
            match &mut s {
                Source::Parupa { words_per_bin, bins: b, .. } => {
                    *words_per_bin = words.unwrap_or(*words_per_bin);
                    *b = bins.unwrap_or(*b);
                }
                Source::Wordlist { tokens_per_bin, bins: b, .. } => {
                    *tokens_per_bin = words.unwrap_or(*tokens_per_bin);
                    *b = bins.unwrap_or(*b);
                }
                Source::Attestations {
                    start_year,
                    bin_width,
                    bins: b,
                    fold_early,
                    ..
                } => {
                    *start_year = args.start_year.unwrap_or(*start_year);
                    *bin_width = args.bin_width.unwrap_or(*bin_width);
                    *b = bins.unwrap_or(*b);
                    *fold_early &= !args.drop_early;
                }
                Source::Manifest { .. } => {}
            }
            s
        })
    };

    if args.rule.is_some() || args.rule_file.is_some() || args.schedule.is_some() || !args.classes.is_empty() {
        let mut change = cfg.change.take().unwrap_or_else(ChangeConfig::default);
        if let Some(rule) = &args.rule {
            change.rule = Some(rule.clone());
            change.rule_file = None;
        }
        if let Some(file) = &args.rule_file {
            change.rule_file = Some(abs(file));
            change.rule = None;
        }
        if let Some(s) = &args.schedule {
            change.schedule = Some(s.clone());
        }
        change.classes.extend(args.classes.iter().cloned());
        cfg.change = Some(change);
    }

    if args.reference.is_some() {
        cfg.reference = args.reference;
    }
    if args.moving.is_some() {
        cfg.moving = args.moving;
    }
    if args.window.is_some() {
        cfg.window = args.window;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.sliding {
        cfg.reference_mode = ReferenceMode::Sliding;
    }
    if let Some(a) = args.context_alpha {
        cfg.ppmi.context_alpha = a;
    }
    Ok(cfg)
}

fn out_dir(args: &RunArgs, default: &str) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_atomic(&dir.join(CONFIG_FILE), cfg.to_toml().as_bytes())?;
    Ok(())
}

enum Generator {
    Parupa(ParupaGenerator),
    Lexicon(LexiconGenerator),
}

fn generator(cfg: &ExperimentConfig) -> Result<Option<Generator>> {
    Ok(match cfg.source()? {
        Source::Parupa {
            spec,
            words_per_bin,
            bins,
        } => Some(Generator::Parupa(ParupaGenerator {
            spec: cfg.parupa_spec(spec.as_deref())?,
            words_per_bin: *words_per_bin,
            n_bins: *bins,
        })),
        Source::Wordlist {
            path,
            tokens_per_bin,
            bins,
        } => {
            let lexicon = match path {
                Some(p) => {
                    let (lex, warnings) = Lexicon::load(p)?;
                    for w in warnings {
                        eprintln!("warning: {}: {w}", p.display());
                    }
                    lex
                }
                None => Lexicon::danish(),
            };
            Some(Generator::Lexicon(LexiconGenerator {
                lexicon,
                tokens_per_bin: *tokens_per_bin,
                n_bins: *bins,
            }))
        }
        _ => None,
    })
}

fn load_manifest(path: &Path, condition: Condition) -> Result<TimeBinnedCorpus> {
    let loaded = load_plain_corpus(path, &TokenizationPolicy::default(), condition)?;
    if loaded.dropped_words > 0 {
        eprintln!(
            "warning: {}: dropped {} words with characters outside the alphabet",
            path.display(),
            loaded.dropped_words
        );
    }
    Ok(loaded.corpus)
}

/// A fixed corpus from a manifest or attestation table, plus an explicit
/// control when one was configured.
fn fixed_corpora(cfg: &ExperimentConfig) -> Result<(TimeBinnedCorpus, Option<TimeBinnedCorpus>)> {
    match cfg.source()? {
        Source::Manifest { target, control } => Ok((
            load_manifest(target, Condition::Target)?,
            control.as_deref().map(|c| load_manifest(c, Condition::Control)).transpose()?,
        )),
        Source::Attestations {
            path,
            start_year,
            bin_width,
            bins,
            fold_early,
        } => {
            let table = load_attestation_table(path)?;
            for w in &table.warnings {
                eprintln!("warning: {}: {w}", path.display());
            }
            let spec = BinSpec {
                start_year: *start_year,
                bin_width_years: *bin_width,
                n_bins: *bins,
                fold_early_into_first: *fold_early,
            };
            let (corpus, binning) = bin_attestations(&table.records, &spec)?;
            if binning.dropped_early + binning.dropped_late > 0 {
                eprintln!(
                    "note: {} attestations before and {} after the binned range were dropped",
                    binning.dropped_early, binning.dropped_late
                );
            }
            Ok((corpus, None))
        }
        _ => unreachable!("generated sources handled by the caller"),
    }
}

fn replicate_source(cfg: &ExperimentConfig) -> Result<Box<dyn ReplicateSource>> {
    let change = cfg.change()?;
    if let Some(g) = generator(cfg)? {
        return Ok(match g {
            Generator::Parupa(generator) => Box::new(SimulatedChange { generator, change }),
            Generator::Lexicon(generator) => Box::new(SimulatedChange { generator, change }),
        });
    }
    let (target, control) = fixed_corpora(cfg)?;
    let (target, control) = match (change, control) {
        (Some((rule, schedule)), control) => {
            let changed = apply_change(&target, &rule, &schedule, seed::derive(cfg.seed, Stage::Simulation, &[0]))?;
            (changed, control.unwrap_or_else(|| target.with_condition(Condition::Control)))
        }
        (None, Some(control)) => (target, control),
        (None, None) => {
            let control = make_shuffle_control(&target, cfg.seed);
            (target, control)
        }
    };
    Ok(Box::new(Resampled { target, control }))
}

fn check_characters(source: &dyn ReplicateSource, cfg: &ExperimentConfig) -> Result<()> {
    let (reference, moving) = cfg.pair()?;
    let (target, control) = source.draw(0, cfg.seed)?;
    let alphabet = target.alphabet().union(control.alphabet());
    for c in [reference, moving] {
        if !alphabet.contains(c) {
            return Err(UsageError(format!("character {c:?} does not occur in the corpus (alphabet: {alphabet})")).into());
        }
    }
    Ok(())
}

fn experiment_spec(cfg: &ExperimentConfig) -> Result<ExperimentSpec> {
    let (reference, moving) = cfg.pair()?;
    let mut spec = ExperimentSpec::new(reference, moving, cfg.window()?, cfg.replicates, cfg.seed);
    spec.ppmi = cfg.ppmi;
    spec.reference_mode = cfg.reference_mode;
    spec.dimensions = cfg.dimensions;
    Ok(spec)
}

fn write_pair(out: &Path, target: &TimeBinnedCorpus, control: &TimeBinnedCorpus) -> Result<()> {
    write_plain_corpus(target, out.join("target"))?;
    write_plain_corpus(control, out.join("control"))?;
    Ok(())
}

pub fn generate(args: &RunArgs) -> Result<()> {
    let cfg = merged(args)?;
    let Some(g) = generator(&cfg)? else {
        return Err(UsageError("generate needs --parupa, --wordlist or --danish".into()).into());
    };
    let seed = seed::derive(cfg.seed, Stage::Generation, &[0]);
    let corpus = match &g {
        Generator::Parupa(g) => g.generate(seed)?,
        Generator::Lexicon(g) => g.generate(seed)?,
    };
    let out = out_dir(args, "corpus");
    let control = corpus.clone().with_condition(Condition::Control);
    write_pair(&out, &corpus, &control)?;
    write_config(&out, &cfg)?;
    println!(
        "wrote {} bins x {} tokens to {}/target and {}/control",
        corpus.n_bins(),
        corpus.bins()[0].len(),
        out.display(),
        out.display()
    );
    Ok(())
}

pub fn simulate(args: &RunArgs) -> Result<()> {
    let cfg = merged(args)?;
    let Some((rule, schedule)) = cfg.change()? else {
        return Err(UsageError("simulate needs --rule or --rule-file, and --schedule".into()).into());
    };
    let (target, control) = match generator(&cfg)? {
        Some(Generator::Parupa(generator)) => SimulatedChange {
            generator,
            change: Some((rule.clone(), schedule)),
        }
        .draw(0, cfg.seed)?,
        Some(Generator::Lexicon(generator)) => SimulatedChange {
            generator,
            change: Some((rule.clone(), schedule)),
        }
        .draw(0, cfg.seed)?,
        None => {
            let (base, _) = fixed_corpora(&cfg)?;
            let changed = apply_change(&base, &rule, &schedule, seed::derive(cfg.seed, Stage::Simulation, &[0]))?;
            (changed, base.with_condition(Condition::Control))
        }
    };
    let out = out_dir(args, "simulated");
    write_pair(&out, &target, &control)?;
    write_config(&out, &cfg)?;
    let changed: usize = target
        .bins()
        .iter()
        .zip(control.bins())
        .map(|(t, c)| t.tokens.iter().zip(&c.tokens).filter(|(a, b)| a != b).count())
        .sum();
    println!(
        "applied {rule} to {} tokens ({changed} changed); wrote {}/target and {}/control",
        target.total_tokens(),
        out.display(),
        out.display()
    );
    Ok(())
}

pub fn embed(args: &EmbedArgs) -> Result<()> {
    if args.window < 2 {
        return Err(UsageError(format!("window size must be at least 2, got {}", args.window)).into());
    }
    let corpus = load_manifest(&args.manifest, Condition::Target)?;
    let counts = corpus
        .bins()
        .iter()
        .map(|b| count_bin(b, args.window))
        .collect::<Result<Vec<_>, _>>()?;
    let options = PpmiOptions {
        context_alpha: args.context_alpha,
    };
    let (basis, matrices) = align_bins(&counts, &options)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let width = corpus.n_bins().to_string().len().max(2);
    for (bin, m) in corpus.bins().iter().zip(&matrices) {
        let stem = args.out.join(format!("bin_{:0width$}", bin.index));
        m.save(
            &stem,
            &EmbeddingMeta {
                n: args.window,
                bin_label: bin.label.clone(),
                condition: Condition::Target,
            },
        )?;
    }
    println!(
        "wrote {} embedding tables ({} dimensions) to {}",
        matrices.len(),
        basis.len(),
        args.out.display()
    );
    Ok(())
}

pub fn analyze(args: &RunArgs) -> Result<()> {
    let cfg = merged(args)?;
    cfg.validate_run()?;
    let source = replicate_source(&cfg)?;
    check_characters(source.as_ref(), &cfg)?;
    let result = run_experiment(source.as_ref(), &experiment_spec(&cfg)?)?;
    let out = out_dir(args, "results");
    report::write_all(&out, &result)?;
    write_config(&out, &cfg)?;
    println!("{}", result.fit);
    println!();
    print!("{}", report::dimensions_table(&result.dimensions.reports, 10));
    println!();
    println!(
        "change indicated (Bin < 0 at p < .05, Bin:Control > 0 at p < .05): {}",
        if indicates_change(&result.fit, 0.05, 0.05) { "yes" } else { "no" }
    );
    println!("results in {}", out.display());
    Ok(())
}

pub fn dims(args: &DimsArgs) -> Result<()> {
    let mut cfg = merged(&args.run)?;
    if args.signed {
        cfg.dimensions.signed = true;
    }
    if let Some(r) = args.r_threshold {
        cfg.dimensions.r_threshold = r;
    }
    if let Some(p) = args.p_threshold {
        cfg.dimensions.p_threshold = p;
    }
    cfg.validate_run()?;
    let source = replicate_source(&cfg)?;
    check_characters(source.as_ref(), &cfg)?;
    let result = run_experiment(source.as_ref(), &experiment_spec(&cfg)?)?;
    let out = out_dir(&args.run, "results");
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    report::write_dimensions(&out.join(report::DIMENSIONS_CSV), &result.dimensions.reports)?;
    write_config(&out, &cfg)?;
    let d = &result.dimensions;
    println!(
        "{} of {} dimensions kept ({} flat)",
        d.reports.len(),
        d.examined,
        d.flat.len()
    );
    print!("{}", report::dimensions_table(&d.reports, args.top));
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let dir = &args.results;
    let fit = report::read_fit(&dir.join(report::COEFFICIENTS_JSON))?;
    println!("{fit}");
    let means_path = dir.join(report::MEAN_DISTANCES_CSV);
    if means_path.exists() {
        let means = report::read_mean_distances(&means_path)?;
        println!();
        println!("{:>4}{:>14}{:>14}", "bin", "target", "control");
        let bins: std::collections::BTreeSet<usize> = means.iter().map(|m| m.bin).collect();
        for bin in bins {
            let get = |c: Condition| {
                means
                    .iter()
                    .find(|m| m.bin == bin && m.condition == c)
                    .map_or("-".to_string(), |m| format!("{:.4}", m.mean_distance))
            };
            println!("{bin:>4}{:>14}{:>14}", get(Condition::Target), get(Condition::Control));
        }
    }
    let dims_path = dir.join(report::DIMENSIONS_CSV);
    if dims_path.exists() {
        let dims = report::read_dimensions(&dims_path)?;
        println!();
        print!("{}", report::dimensions_table(&dims, args.top));
    }
    Ok(())
}
