//! Sound change detection in time-binned corpora.
//!
//! Per-bin character embeddings are built from directional n-gram contexts
//! with PPMI weighting. A change `a > b` shows up as the moving character
//! `b` drifting towards the bin-1 distribution of `a`; a linear model
//! `Distance ~ Bin * Corpus` tests whether that drift is absent from a
//! control corpus.
//!
//! Toy-language generation ([`parupa`]) and a rule engine ([`change`]) let
//! the method be checked against injected, known changes.

pub mod analysis;
pub mod change;
pub mod corpus;
pub mod embedding;
pub mod lexicon;
pub mod parupa;
pub mod report;
pub mod seed;
pub mod stats;

pub use analysis::{
    distance_series, indicates_change, per_dimension_analysis, run_experiment, DimensionAnalysis, DimensionOptions,
    DimensionReport, DistanceSeries, ExperimentResult, ExperimentSpec, ReferenceMode, ReplicateSource,
};
pub use change::{apply_change, match_sites, ChangeRule, ClassMap, Schedule};
pub use corpus::{
    bin_attestations, make_shuffle_control, tokenize, Alphabet, Attestation, BinSpec, Condition, TimeBin,
    TimeBinnedCorpus, TokenizationPolicy,
};
pub use embedding::{align_bins, count_bin, extract_contexts, ppmi, ContextPattern, CooccurrenceCounts, EmbeddingMatrix};
pub use parupa::{generate_corpus, generate_word, PhonotacticSpec};
pub use stats::{ols_interaction, pearson, t_sf, RegressionFit};
