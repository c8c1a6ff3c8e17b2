//! `soundshift` command-line front end.
//!
//! Exit codes: 0 on completion (whatever the statistics say), 2 for usage
//! errors and missing input files, 1 for any other failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

/// An invalid invocation or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "soundshift", version, about = "Detect sound change in time-binned corpora with diachronic PPMI character embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate target and control corpora (one token per line per bin, plus a manifest).
    Generate(RunArgs),
    /// Apply a change rule to a corpus; writes the changed target and the untouched control.
    Simulate(RunArgs),
    /// Write per-bin PPMI embeddings of a plain corpus on a shared basis.
    Embed(EmbedArgs),
    /// Run the full experiment: distances, regression, per-dimension analysis.
    Analyze(RunArgs),
    /// Run the experiment and write only the ranked dimension list.
    Dims(DimsArgs),
    /// Print a summary of a results directory.
    Report(ReportArgs),
}

/// Source, change and analysis settings; every flag overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Generate Parupa corpora.
    #[arg(long, group = "src")]
    pub parupa: bool,
    /// Phonotactic spec (TOML) replacing the built-in Parupa inventory.
    #[arg(long, value_name = "FILE", requires = "parupa")]
    pub spec: Option<PathBuf>,
    /// Draw tokens from a `word<TAB>weight` list.
    #[arg(long, value_name = "FILE", group = "src")]
    pub wordlist: Option<PathBuf>,
    /// Draw tokens from the bundled Danish word list.
    #[arg(long, group = "src")]
    pub danish: bool,
    /// Manifest (`bin_index<TAB>path`) of the target corpus.
    #[arg(long, value_name = "MANIFEST", group = "src")]
    pub target: Option<PathBuf>,
    /// Manifest of the control corpus (default: shuffle of the target).
    #[arg(long, value_name = "MANIFEST", requires = "target")]
    pub control: Option<PathBuf>,
    /// Directory written by `generate` or `simulate` (uses its target/ and control/).
    #[arg(long, value_name = "DIR", group = "src")]
    pub input: Option<PathBuf>,
    /// Attestation table (`year<TAB>form`).
    #[arg(long, value_name = "FILE", group = "src")]
    pub attestations: Option<PathBuf>,
    /// First year of bin 1 (attestations).
    #[arg(long)]
    pub start_year: Option<i32>,
    /// Bin width in years (attestations).
    #[arg(long)]
    pub bin_width: Option<i32>,
    /// Drop attestations before the start year instead of folding them into bin 1.
    #[arg(long)]
    pub drop_early: bool,
    /// Number of bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Words (tokens) per bin for generated corpora.
    #[arg(long)]
    pub words: Option<usize>,

    /// Change rule, e.g. `p > b / _ {i,u}`.
    #[arg(long)]
    pub rule: Option<String>,
    /// File holding one change rule (`#` lines are comments).
    #[arg(long, value_name = "FILE", conflicts_with = "rule")]
    pub rule_file: Option<PathBuf>,
    /// Per-bin application probabilities, e.g. `0,.25,.5,.75,1`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Character class definition such as `V=aeiou` (repeatable).
    #[arg(long = "class", value_name = "NAME=CHARS")]
    pub classes: Vec<String>,

    /// Reference character (its bin-1 vector is the fixed point).
    #[arg(long)]
    pub reference: Option<char>,
    /// Moving character.
    #[arg(long)]
    pub moving: Option<char>,
    /// Context window size n (>= 2).
    #[arg(long)]
    pub window: Option<usize>,
    /// Replicates per condition.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Root random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measure each bin against the previous bin's reference vector.
    #[arg(long)]
    pub sliding: bool,
    /// Context-distribution smoothing exponent for PPMI (1 = none).
    #[arg(long)]
    pub context_alpha: Option<f64>,

    /// Output directory.
    #[arg(long, short, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Use the signed difference instead of its absolute value.
    #[arg(long)]
    pub signed: bool,
    /// Keep dimensions with Pearson r below this.
    #[arg(long)]
    pub r_threshold: Option<f64>,
    /// Keep dimensions with p below this.
    #[arg(long)]
    pub p_threshold: Option<f64>,
    /// Rows to print.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Corpus manifest (`bin_index<TAB>path`).
    #[arg(long, value_name = "MANIFEST")]
    pub manifest: PathBuf,
    /// Context window size n (>= 2).
    #[arg(long)]
    pub window: usize,
    /// Context-distribution smoothing exponent (1 = none).
    #[arg(long, default_value_t = 1.0)]
    pub context_alpha: f64,
    /// Output directory.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `analyze`.
    #[arg(long, value_name = "DIR")]
    pub results: PathBuf,
    /// Dimension rows to print.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

fn is_missing_file(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::NotFound)
    })
}

/// `a: b: c` for the error chain, skipping causes already quoted by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for e in err.chain() {
        let msg = e.to_string();
        if !last.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        last = msg;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Generate(_) => "generate",
        Command::Simulate(_) => "simulate",
        Command::Embed(_) => "embed",
        Command::Analyze(_) => "analyze",
        Command::Dims(_) => "dims",
        Command::Report(_) => "report",
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Embed(a) => commands::embed(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Dims(a) => commands::dims(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let Some(usage) = err.chain().find_map(|e| e.downcast_ref::<UsageError>()) {
                let mut cmd = Cli::command();
                cmd.build();
                let sub = cmd.find_subcommand_mut(name).expect("known subcommand");
                let usage_text = sub.render_usage();
                eprintln!("error: {usage}\n\n{usage_text}\n\nFor more information, try 'soundshift {name} --help'.");
                return ExitCode::from(2);
            }
            eprintln!("error: {}", render(&err));
            ExitCode::from(if is_missing_file(&err) { 2 } else { 1 })
        }
    }
}
