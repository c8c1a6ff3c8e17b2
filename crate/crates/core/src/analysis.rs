//! Distance between a frozen reference character and a moving character
//! across bins, target vs control regression, and per-dimension discovery
//! of the contexts driving a convergence.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::change::{apply_change, ChangeError, ChangeRule, Schedule};
use crate::corpus::{make_shuffle_control, Condition, CorpusError, TimeBinnedCorpus};
use crate::embedding::{count_bin, Basis, ContextPattern, CooccurrenceCounts, EmbeddingError, EmbeddingMatrix, PpmiOptions};
use crate::lexicon::Lexicon;
use crate::parupa::{generate_corpus, PhonotacticSpec, SpecError};
use crate::seed::{self, Stage};
use crate::stats::{self, ols_interaction, InteractionRow, RegressionFit, StatsError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("bin {bin}: character {character:?} does not occur")]
    MissingCharacter { bin: usize, character: char },
    #[error("need at least {needed} bins, got {got}")]
    TooFewBins { needed: usize, got: usize },
    #[error("target has {target} bins but control has {control}")]
    BinMismatch { target: usize, control: usize },
    #[error("matrices do not share one basis")]
    BasisMismatch,
    #[error("need at least one replicate")]
    NoReplicates,
    #[error("regression: {0}")]
    Stats(#[from] StatsError),
    #[error("embedding: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("sound change: {0}")]
    Change(#[from] ChangeError),
    #[error("generator: {0}")]
    Spec(#[from] SpecError),
}

/// Where the reference vector comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    /// Reference character's vector in bin 1, for every bin.
    #[default]
    Frozen,
    /// Reference character's vector in the previous bin (bin 1 for bin 1).
    Sliding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub reference_char: char,
    pub moving_char: char,
    pub condition: Condition,
    pub replicate_id: usize,
    /// `(bin index, distance)`, one per bin.
    pub points: Vec<(usize, f64)>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn vector_in(embeddings: &[EmbeddingMatrix], bin: usize, c: char) -> Result<&[f64], AnalysisError> {
    embeddings[bin]
        .vector(c)
        .map_err(|_| AnalysisError::MissingCharacter { bin: bin + 1, character: c })
}

fn check_shared_basis(embeddings: &[EmbeddingMatrix]) -> Result<(), AnalysisError> {
    let first = embeddings[0].basis();
    if embeddings
        .iter()
        .any(|m| !Arc::ptr_eq(m.basis(), first) && m.basis().as_ref() != first.as_ref())
    {
        return Err(AnalysisError::BasisMismatch);
    }
    Ok(())
}

/// Distances from the reference character's vector to the moving
/// character's vector in each bin.
pub fn distance_series(
    embeddings: &[EmbeddingMatrix],
    reference: char,
    moving: char,
    mode: ReferenceMode,
) -> Result<Vec<f64>, AnalysisError> {
    if embeddings.len() < 2 {
        return Err(AnalysisError::TooFewBins {
            needed: 2,
            got: embeddings.len(),
        });
    }
    check_shared_basis(embeddings)?;
    (0..embeddings.len())
        .map(|i| {
            let ref_bin = match mode {
                ReferenceMode::Frozen => 0,
                ReferenceMode::Sliding => i.saturating_sub(1),
            };
            let r = vector_in(embeddings, ref_bin, reference)?;
            let m = vector_in(embeddings, i, moving)?;
            Ok(euclidean(r, m))
        })
        .collect()
}

/// Signed per-dimension differences `reference(bin 1) - moving(bin i)`,
/// one row per bin.
pub fn per_dimension_differences(
    embeddings: &[EmbeddingMatrix],
    reference: char,
    moving: char,
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    if embeddings.is_empty() {
        return Err(AnalysisError::TooFewBins { needed: 1, got: 0 });
    }
    check_shared_basis(embeddings)?;
    let r = vector_in(embeddings, 0, reference)?;
    (0..embeddings.len())
        .map(|i| {
            let m = vector_in(embeddings, i, moving)?;
            Ok(r.iter().zip(m).map(|(a, b)| a - b).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    pub r_threshold: f64,
    pub p_threshold: f64,
    /// Use the signed difference instead of its absolute value.
    pub signed: bool,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            r_threshold: -0.2,
            p_threshold: 0.05,
            signed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub pattern: ContextPattern,
    pub slope: f64,
    pub pearson_r: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DimensionAnalysis {
    /// Kept dimensions, steepest (most negative) slope first.
    pub reports: Vec<DimensionReport>,
    /// Dimensions skipped because their series never changes.
    pub flat: Vec<ContextPattern>,
    pub examined: usize,
}

/// For each dimension, regresses `|reference(bin 1)[d] - moving(bin i)[d]|`
/// on the bin index; keeps dimensions with r below `r_threshold` and p below
/// `p_threshold`, sorted by slope.
pub fn per_dimension_analysis(
    embeddings: &[EmbeddingMatrix],
    reference: char,
    moving: char,
    options: &DimensionOptions,
) -> Result<DimensionAnalysis, AnalysisError> {
    if embeddings.len() < 3 {
        return Err(AnalysisError::TooFewBins {
            needed: 3,
            got: embeddings.len(),
        });
    }
    let diffs = per_dimension_differences(embeddings, reference, moving)?;
    let bins: Vec<f64> = (1..=embeddings.len()).map(|i| i as f64).collect();
    let patterns = embeddings[0].dimensions();
    let mut out = DimensionAnalysis {
        examined: patterns.len(),
        ..Default::default()
    };
    for (d, pattern) in patterns.iter().enumerate() {
        let y: Vec<f64> = diffs
            .iter()
            .map(|row| if options.signed { row[d] } else { row[d].abs() })
            .collect();
        let corr = match stats::pearson(&bins, &y) {
            Ok(c) => c,
            Err(StatsError::Flat) => {
                out.flat.push(pattern.clone());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if corr.r < options.r_threshold && corr.p < options.p_threshold {
            out.reports.push(DimensionReport {
                pattern: pattern.clone(),
                slope: stats::slope(&bins, &y)?,
                pearson_r: corr.r,
                p_value: corr.p,
            });
        }
    }
    out.reports.sort_by(|a, b| {
        a.slope
            .partial_cmp(&b.slope)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.pattern.cmp(&b.pattern))
    });
    Ok(out)
}

/// Produces a fresh corpus per replicate.
pub trait CorpusGenerator: Sync {
    fn generate(&self, seed: u64) -> Result<TimeBinnedCorpus, AnalysisError>;
}

pub struct ParupaGenerator {
    pub spec: PhonotacticSpec,
    pub words_per_bin: usize,
    pub n_bins: usize,
}

impl CorpusGenerator for ParupaGenerator {
    fn generate(&self, seed: u64) -> Result<TimeBinnedCorpus, AnalysisError> {
        Ok(generate_corpus(&self.spec, self.words_per_bin, self.n_bins, seed)?)
    }
}

pub struct LexiconGenerator {
    pub lexicon: Lexicon,
    pub tokens_per_bin: usize,
    pub n_bins: usize,
}

impl CorpusGenerator for LexiconGenerator {
    fn generate(&self, seed: u64) -> Result<TimeBinnedCorpus, AnalysisError> {
        Ok(self.lexicon.generate_corpus(self.tokens_per_bin, self.n_bins, seed)?)
    }
}

/// Bootstrap resamples of a fixed corpus.
pub struct BootstrapGenerator {
    pub corpus: TimeBinnedCorpus,
}

impl CorpusGenerator for BootstrapGenerator {
    fn generate(&self, seed: u64) -> Result<TimeBinnedCorpus, AnalysisError> {
        Ok(self.corpus.bootstrap(seed))
    }
}

/// Yields one (target, control) pair per replicate.
pub trait ReplicateSource: Sync {
    fn draw(&self, replicate: usize, seed: u64) -> Result<(TimeBinnedCorpus, TimeBinnedCorpus), AnalysisError>;
}

/// Generated corpus with an optional injected change: the changed version
/// is the target, the untouched twin is the control.
pub struct SimulatedChange<G> {
    pub generator: G,
    pub change: Option<(ChangeRule, Schedule)>,
}

impl<G: CorpusGenerator> ReplicateSource for SimulatedChange<G> {
    fn draw(&self, replicate: usize, seed: u64) -> Result<(TimeBinnedCorpus, TimeBinnedCorpus), AnalysisError> {
        let base = self
            .generator
            .generate(seed::derive(seed, Stage::Generation, &[replicate as u64]))?;
        let target = match &self.change {
            Some((rule, schedule)) => apply_change(
                &base,
                rule,
                schedule,
                seed::derive(seed, Stage::Simulation, &[replicate as u64]),
            )?,
            None => base.clone(),
        };
        Ok((
            target.with_condition(Condition::Target),
            base.with_condition(Condition::Control),
        ))
    }
}

/// Fixed target/control corpora, replicated by resampling tokens within
/// each bin of both.
pub struct Resampled {
    pub target: TimeBinnedCorpus,
    pub control: TimeBinnedCorpus,
}

impl Resampled {
    /// Control made by shuffling the target across bins.
    pub fn with_shuffle_control(target: TimeBinnedCorpus, seed: u64) -> Self {
        let control = make_shuffle_control(&target, seed);
        Resampled { target, control }
    }
}

impl ReplicateSource for Resampled {
    fn draw(&self, replicate: usize, seed: u64) -> Result<(TimeBinnedCorpus, TimeBinnedCorpus), AnalysisError> {
        let r = replicate as u64;
        Ok((
            self.target
                .bootstrap(seed::derive(seed, Stage::Bootstrap, &[r, 0]))
                .with_condition(Condition::Target),
            self.control
                .bootstrap(seed::derive(seed, Stage::Bootstrap, &[r, 1]))
                .with_condition(Condition::Control),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub reference: char,
    pub moving: char,
    pub window: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub ppmi: PpmiOptions,
    #[serde(default)]
    pub reference_mode: ReferenceMode,
    #[serde(default)]
    pub dimensions: DimensionOptions,
}

impl ExperimentSpec {
    pub fn new(reference: char, moving: char, window: usize, replicates: usize, seed: u64) -> Self {
        ExperimentSpec {
            reference,
            moving,
            window,
            replicates,
            seed,
            ppmi: PpmiOptions::default(),
            reference_mode: ReferenceMode::Frozen,
            dimensions: DimensionOptions::default(),
        }
    }
}

/// One replicate's embeddings on the experiment-wide basis.
#[derive(Debug, Clone)]
pub struct ReplicateEmbeddings {
    pub target: Vec<EmbeddingMatrix>,
    pub control: Vec<EmbeddingMatrix>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub fit: RegressionFit,
    pub series: Vec<DistanceSeries>,
    /// Target embeddings averaged over replicates, per bin.
    pub mean_target: Vec<EmbeddingMatrix>,
    pub dimensions: DimensionAnalysis,
    pub basis: Arc<Basis>,
    pub replicates: Vec<ReplicateEmbeddings>,
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<InteractionRow> {
        rows_from_series(&self.series)
    }
}

fn rows_from_series(series: &[DistanceSeries]) -> Vec<InteractionRow> {
    series
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |&(bin, distance)| InteractionRow {
                bin: bin as f64,
                is_control: s.condition.is_control(),
                distance,
            })
        })
        .collect()
}

/// Runs the full target-vs-control comparison:
///
/// 1. draw `replicates` (target, control) pairs from `source`;
/// 2. count contexts per bin and condition, and build one basis over all of them;
/// 3. compute PPMI matrices and distance series for both conditions;
/// 4. fit `Distance ~ Bin * Corpus` over every (replicate, condition, bin) row;
/// 5. run the per-dimension analysis on the replicate-averaged target matrices.
///
/// Replicates are processed in parallel and merged by replicate id, so the
/// outcome depends only on `spec.seed`.
pub fn run_experiment(source: &dyn ReplicateSource, spec: &ExperimentSpec) -> Result<ExperimentResult, AnalysisError> {
    if spec.replicates == 0 {
        return Err(AnalysisError::NoReplicates);
    }
    let counted: Vec<(Vec<CooccurrenceCounts>, Vec<CooccurrenceCounts>)> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let (target, control) = source.draw(r, spec.seed)?;
            if target.n_bins() != control.n_bins() {
                return Err(AnalysisError::BinMismatch {
                    target: target.n_bins(),
                    control: control.n_bins(),
                });
            }
            let count = |c: &TimeBinnedCorpus| {
                c.bins()
                    .par_iter()
                    .map(|b| count_bin(b, spec.window))
                    .collect::<Result<Vec<_>, _>>()
            };
            Ok((count(&target)?, count(&control)?))
        })
        .collect::<Result<_, AnalysisError>>()?;

    let n_bins = counted[0].0.len();
    if n_bins < 2 {
        return Err(AnalysisError::TooFewBins { needed: 2, got: n_bins });
    }
    let basis = Arc::new(Basis::new(
        counted
            .iter()
            .flat_map(|(t, c)| t.iter().chain(c))
            .flat_map(|c| c.contexts().cloned())
            .collect::<std::collections::BTreeSet<_>>(),
    ));

    let per_replicate: Vec<(ReplicateEmbeddings, [DistanceSeries; 2])> = counted
        .par_iter()
        .enumerate()
        .map(|(r, (t_counts, c_counts))| {
            let embed = |counts: &[CooccurrenceCounts]| {
                counts
                    .iter()
                    .map(|c| crate::embedding::ppmi(c, &basis, &spec.ppmi))
                    .collect::<Result<Vec<_>, _>>()
            };
            let target = embed(t_counts)?;
            let control = embed(c_counts)?;
            let series = |m: &[EmbeddingMatrix], condition| -> Result<DistanceSeries, AnalysisError> {
                let d = distance_series(m, spec.reference, spec.moving, spec.reference_mode)?;
                Ok(DistanceSeries {
                    reference_char: spec.reference,
                    moving_char: spec.moving,
                    condition,
                    replicate_id: r,
                    points: d.into_iter().enumerate().map(|(i, x)| (i + 1, x)).collect(),
                })
            };
            let s = [series(&target, Condition::Target)?, series(&control, Condition::Control)?];
            Ok((ReplicateEmbeddings { target, control }, s))
        })
        .collect::<Result<_, AnalysisError>>()?;

    let mut series = Vec::with_capacity(2 * spec.replicates);
    let mut replicates = Vec::with_capacity(spec.replicates);
    for (emb, [t, c]) in per_replicate {
        series.push(t);
        series.push(c);
        replicates.push(emb);
    }
    let fit = ols_interaction(&rows_from_series(&series))?;

    let mean_target = (0..n_bins)
        .map(|b| EmbeddingMatrix::mean(&replicates.iter().map(|r| &r.target[b]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, _>>()?;
    let dimensions = if n_bins >= 3 {
        per_dimension_analysis(&mean_target, spec.reference, spec.moving, &spec.dimensions)?
    } else {
        DimensionAnalysis::default()
    };

    Ok(ExperimentResult {
        fit,
        series,
        mean_target,
        dimensions,
        basis,
        replicates,
    })
}

/// Whether the fit shows a convergence that the control lacks: a significant
/// negative Bin effect and a significant interaction of opposite sign.
pub fn indicates_change(fit: &RegressionFit, alpha_bin: f64, alpha_interaction: f64) -> bool {
    let bin = fit.estimate("Bin");
    let inter = fit.estimate("Bin:Control");
    bin < 0.0 && fit.p_value("Bin") < alpha_bin && inter > 0.0 && fit.p_value("Bin:Control") < alpha_interaction
}
