//! Declarative experiment configuration (TOML), merged with command-line
//! overrides.
//!
//! ```toml
//! reference = "p"
//! moving = "b"
//! window = 2
//! replicates = 10
//! seed = 7
//!
//! [source]
//! kind = "parupa"          # parupa | wordlist | manifest | attestations
//! words_per_bin = 20000
//! bins = 5
//!
//! [change]
//! rule = "p > b / _ {i,u}"
//! schedule = "0,.25,.5,.75,1"
//! classes = ["V=ieuoa"]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.
//! The effective configuration is written next to every command's output
//! with absolute paths, so it can be passed back with `--config`.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};
use soundshift::analysis::{DimensionOptions, ReferenceMode};
use soundshift::change::{ChangeRule, ClassMap, Schedule};
use soundshift::embedding::PpmiOptions;
use soundshift::lexicon::DANISH_VOWELS;
use soundshift::parupa::PhonotacticSpec;

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Source {
    /// Generated Parupa corpora; `spec` defaults to the built-in inventory.
    Parupa {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec: Option<PathBuf>,
        words_per_bin: usize,
        bins: usize,
    },
    /// Tokens drawn by frequency from a `word<TAB>weight` list; the bundled
    /// Danish list when `path` is absent.
    Wordlist {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        tokens_per_bin: usize,
        bins: usize,
    },
    /// Plain-text corpora described by `bin_index<TAB>path` manifests. Without
    /// a control (and without a change) the control is a shuffle of the target.
    Manifest {
        target: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        control: Option<PathBuf>,
    },
    /// `year<TAB>form` attestation table, binned by year.
    Attestations {
        path: PathBuf,
        start_year: i32,
        bin_width: i32,
        bins: usize,
        #[serde(default = "yes")]
        fold_early: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    /// Class definitions such as `V=aeiou`; `V` defaults to the source's vowels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<char>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moving: Option<char>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default = "ten")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reference_mode: ReferenceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change: Option<ChangeConfig>,
    #[serde(default)]
    pub ppmi: PpmiOptions,
    #[serde(default)]
    pub dimensions: DimensionOptions,
}

fn ten() -> usize {
    10
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            reference: None,
            moving: None,
            window: None,
            replicates: 10,
            seed: 0,
            reference_mode: ReferenceMode::Frozen,
            source: None,
            change: None,
            ppmi: PpmiOptions::default(),
            dimensions: DimensionOptions::default(),
        }
    }
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    std::path::absolute(&joined).unwrap_or(joined)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| soundshift::corpus::CorpusError::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| UsageError(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes every path absolute relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        match &mut self.source {
            Some(Source::Parupa { spec: Some(p), .. }) | Some(Source::Wordlist { path: Some(p), .. }) => {
                *p = absolute(base, p)
            }
            Some(Source::Manifest { target, control }) => {
                *target = absolute(base, target);
                if let Some(c) = control {
                    *c = absolute(base, c);
                }
            }
            Some(Source::Attestations { path, .. }) => *path = absolute(base, path),
            _ => {}
        }
        if let Some(ChangeConfig {
            rule_file: Some(p), ..
        }) = &mut self.change
        {
            *p = absolute(base, p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn source(&self) -> Result<&Source> {
        self.source.as_ref().ok_or_else(|| {
            UsageError("no corpus source: pass --parupa, --wordlist, --danish, --target or --attestations, or a config with [source]".into()).into()
        })
    }

    pub fn window(&self) -> Result<usize> {
        match self.window {
            Some(n) if n >= 2 => Ok(n),
            Some(n) => Err(UsageError(format!("window size must be at least 2, got {n}")).into()),
            None => Err(UsageError("missing window size: pass --window or set `window`".into()).into()),
        }
    }

    pub fn pair(&self) -> Result<(char, char)> {
        match (self.reference, self.moving) {
            (Some(r), Some(m)) => Ok((r, m)),
            _ => Err(UsageError("missing character pair: pass --reference and --moving".into()).into()),
        }
    }

    pub fn validate_run(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(UsageError("replicates must be at least 1".into()).into());
        }
        self.window()?;
        self.pair()?;
        self.source()?;
        Ok(())
    }

    fn default_vowels(&self) -> Result<String> {
        Ok(match &self.source {
            Some(Source::Parupa { spec, .. }) => self.parupa_spec(spec.as_deref())?.vowels.iter().collect(),
            _ => DANISH_VOWELS.to_string(),
        })
    }

    pub fn parupa_spec(&self, path: Option<&Path>) -> Result<PhonotacticSpec> {
        match path {
            Some(p) => PhonotacticSpec::load(p).map_err(|e| match e {
                soundshift::parupa::SpecError::Corpus(io) => anyhow::Error::from(io),
                other => UsageError(format!("{}: {other}", p.display())).into(),
            }),
            None => Ok(PhonotacticSpec::parupa()),
        }
    }

    /// The configured change, parsed; `None` when there is no `[change]`.
    pub fn change(&self) -> Result<Option<(ChangeRule, Schedule)>> {
        let Some(change) = &self.change else {
            return Ok(None);
        };
        let mut classes = ClassMap::with_vowels(&self.default_vowels()?, None);
        for def in &change.classes {
            classes.parse_definition(def).map_err(UsageError)?;
        }
        let rule = match (&change.rule, &change.rule_file) {
            (Some(text), None) => ChangeRule::parse(text, &classes).map_err(|e| UsageError(format!("rule {text:?}: {e}")))?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| soundshift::corpus::CorpusError::io(path, e))?;
                let mut rules = ChangeRule::parse_file(&text, &classes).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
                if rules.len() != 1 {
                    return Err(UsageError(format!(
                        "{}: expected exactly one rule, found {}",
                        path.display(),
                        rules.len()
                    ))
                    .into());
                }
                rules.remove(0)
            }
            (Some(_), Some(_)) => return Err(UsageError("give either --rule or --rule-file, not both".into()).into()),
            (None, None) => return Err(UsageError("a change needs --rule or --rule-file".into()).into()),
        };
        let schedule = match &change.schedule {
            Some(s) => Schedule::parse(s).map_err(|e| UsageError(format!("schedule {s:?}: {e}")))?,
            None => return Err(UsageError("a change needs --schedule".into()).into()),
        };
        Ok(Some((rule, schedule)))
    }
}
