//! Pipeline configuration.
//!
//! The config file is flat `key = value` text. `#` starts a comment line,
//! blank lines are ignored and `edges` may repeat:
//!
//! ```text
//! edges = followees.tsv follows
//! edges = followers.tsv followed-by
//! profiles = profiles.tsv
//! timelines = timelines.tsv
//! low_threshold = 0.25
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! Command-line `--set key=value` pairs are applied afterwards and resolve
//! against the working directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use recispace_core::activity::{KindPrecedence, DEFAULT_ENGAGEMENT_CUTOFF};
use recispace_core::graph::{MalformedPolicy, ReciprocityScope};
use recispace_core::vocab::{parse_stopwords, DocumentFilter, TokenizerOptions, VocabParams, DEFAULT_STOPWORDS};
use recispace_core::{ClassifierConfig, Direction};
use sha2::{Digest, Sha256};

use crate::edges::EdgeSource;
use crate::{Error, Result};

pub const OUTPUT_DIR_ENV: &str = "RECISPACE_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub edges: Vec<EdgeSource>,
    pub profiles: Option<PathBuf>,
    pub timelines: Option<PathBuf>,
    pub focal: Option<PathBuf>,
    pub classifier: ClassifierConfig,
    pub grid_resolution: usize,
    pub cutoff: i64,
    /// `None` means the bundled English list.
    pub stopwords: Option<PathBuf>,
    pub vocab: VocabParams,
    /// `None` accepts every language.
    pub vocab_lang: Option<String>,
    pub vocab_originals_only: bool,
    pub keep_hashtags: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub min_total_degree: u64,
    pub corner_only_flows: bool,
    pub strict: bool,
    pub timeline_cap: Option<usize>,
    pub reciprocity_scope: ReciprocityScope,
    pub quote_over_reply: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            edges: Vec::new(),
            profiles: None,
            timelines: None,
            focal: None,
            classifier: ClassifierConfig::default(),
            grid_resolution: 10,
            cutoff: DEFAULT_ENGAGEMENT_CUTOFF,
            stopwords: None,
            vocab: VocabParams::default(),
            vocab_lang: Some("en".into()),
            vocab_originals_only: true,
            keep_hashtags: true,
            seed: 0,
            output_dir: PathBuf::from("report"),
            min_total_degree: 0,
            corner_only_flows: false,
            strict: false,
            timeline_cap: None,
            reciprocity_scope: ReciprocityScope::AllEndpoints,
            quote_over_reply: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Validation(format!("{key}: {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Validation(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn opt_path(base: &Path, value: &str) -> Option<PathBuf> {
    match value {
        "" | "none" => None,
        v => Some(resolve(base, v)),
    }
}

impl PipelineConfig {
    /// Applies one key; `base` anchors relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let value = value.trim();
        match key {
            "edges" => {
                let (path, dir) = value.rsplit_once(char::is_whitespace).ok_or_else(|| {
                    Error::Validation(format!("edges: expected `<path> <direction>`, got {value:?}"))
                })?;
                let direction: Direction = parse_value(key, dir.trim())?;
                self.edges.push(EdgeSource {
                    path: resolve(base, path.trim()),
                    direction,
                });
            }
            "profiles" => self.profiles = opt_path(base, value),
            "timelines" => self.timelines = opt_path(base, value),
            "focal" => self.focal = opt_path(base, value),
            "stopwords" => {
                self.stopwords = match value {
                    "default" => None,
                    v => opt_path(base, v),
                }
            }
            "output_dir" => self.output_dir = resolve(base, value),
            "low_threshold" => {
                let low = parse_value(key, value)?;
                self.classifier = ClassifierConfig::new(low, self.classifier.high())?;
            }
            "high_threshold" => {
                let high = parse_value(key, value)?;
                self.classifier = ClassifierConfig::new(self.classifier.low(), high)?;
            }
            "grid_resolution" => self.grid_resolution = parse_value(key, value)?,
            "cutoff" => self.cutoff = parse_value(key, value)?,
            "vocab_k" => self.vocab.k = parse_value(key, value)?,
            "vocab_min_support" => self.vocab.min_support = parse_value(key, value)?,
            "include_empty_users" => self.vocab.include_empty_users = parse_bool(key, value)?,
            "vocab_lang" => {
                self.vocab_lang = match value {
                    "" | "any" => None,
                    v => Some(v.to_string()),
                }
            }
            "vocab_originals_only" => self.vocab_originals_only = parse_bool(key, value)?,
            "keep_hashtags" => self.keep_hashtags = parse_bool(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "min_total_degree" => self.min_total_degree = parse_value(key, value)?,
            "corner_only_flows" => self.corner_only_flows = parse_bool(key, value)?,
            "strict" => self.strict = parse_bool(key, value)?,
            "timeline_cap" => {
                self.timeline_cap = match value {
                    "" | "none" | "0" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "reciprocity_scope" => {
                self.reciprocity_scope = match value {
                    "all" => ReciprocityScope::AllEndpoints,
                    "focal" => ReciprocityScope::FocalOnly,
                    _ => {
                        return Err(Error::Validation(format!(
                            "reciprocity_scope: expected all|focal, got {value:?}"
                        )))
                    }
                }
            }
            "quote_over_reply" => self.quote_over_reply = parse_bool(key, value)?,
            other => return Err(Error::Validation(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses config text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Validation(format!("config line {}: expected `key = value`", i + 1))
            })?;
            cfg.set(key.trim(), value, base)
                .map_err(|e| Error::Validation(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
        Self::parse(&text, &base)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, pairs: &[String], base: &Path) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("--set expects key=value, got {pair:?}")))?;
            self.set(k.trim(), v, base)?;
        }
        Ok(())
    }

    /// Every referenced input must exist; the first missing one is named.
    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::Validation("no edge files configured".into()));
        }
        if self.grid_resolution == 0 {
            return Err(Error::Validation("grid_resolution must be >= 1".into()));
        }
        if self.vocab.k == 0 || self.vocab.min_support == 0 {
            return Err(Error::Validation("vocab_k and vocab_min_support must be >= 1".into()));
        }
        for path in self.input_paths() {
            if !path.is_file() {
                return Err(Error::Validation(format!(
                    "input file not found: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn input_paths(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.edges.iter().map(|e| e.path.clone()).collect();
        out.extend(
            [&self.profiles, &self.timelines, &self.focal, &self.stopwords]
                .into_iter()
                .flatten()
                .cloned(),
        );
        out
    }

    pub fn malformed_policy(&self) -> MalformedPolicy {
        if self.strict {
            MalformedPolicy::Abort
        } else {
            MalformedPolicy::Skip
        }
    }

    pub fn precedence(&self) -> KindPrecedence {
        if self.quote_over_reply {
            KindPrecedence::QuoteOverReply
        } else {
            KindPrecedence::ReplyOverQuote
        }
    }

    pub fn document_filter(&self) -> DocumentFilter {
        DocumentFilter {
            lang: self.vocab_lang.clone(),
            originals_only: self.vocab_originals_only,
        }
    }

    pub fn tokenizer(&self) -> Result<TokenizerOptions> {
        let stopwords: BTreeSet<String> = match &self.stopwords {
            None => parse_stopwords(DEFAULT_STOPWORDS),
            Some(p) => parse_stopwords(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        };
        Ok(TokenizerOptions {
            stopwords,
            keep_hashtags: self.keep_hashtags,
        })
    }

    /// Canonical `key = value` lines. The output directory is left out so
    /// that the same analysis written to two places hashes the same.
    pub fn echo(&self) -> String {
        let mut lines = Vec::new();
        for e in &self.edges {
            lines.push(format!("edges = {} {}", e.path.display(), e.direction.as_str()));
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into());
        lines.push(format!("profiles = {}", path(&self.profiles)));
        lines.push(format!("timelines = {}", path(&self.timelines)));
        lines.push(format!("focal = {}", path(&self.focal)));
        lines.push(format!(
            "stopwords = {}",
            self.stopwords
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "default".into())
        ));
        lines.push(format!("low_threshold = {}", self.classifier.low()));
        lines.push(format!("high_threshold = {}", self.classifier.high()));
        lines.push(format!("grid_resolution = {}", self.grid_resolution));
        lines.push(format!("cutoff = {}", self.cutoff));
        lines.push(format!("vocab_k = {}", self.vocab.k));
        lines.push(format!("vocab_min_support = {}", self.vocab.min_support));
        lines.push(format!("include_empty_users = {}", self.vocab.include_empty_users));
        lines.push(format!("vocab_lang = {}", self.vocab_lang.as_deref().unwrap_or("any")));
        lines.push(format!("vocab_originals_only = {}", self.vocab_originals_only));
        lines.push(format!("keep_hashtags = {}", self.keep_hashtags));
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("min_total_degree = {}", self.min_total_degree));
        lines.push(format!("corner_only_flows = {}", self.corner_only_flows));
        lines.push(format!("strict = {}", self.strict));
        lines.push(format!(
            "timeline_cap = {}",
            self.timeline_cap.map(|c| c.to_string()).unwrap_or_else(|| "none".into())
        ));
        lines.push(format!(
            "reciprocity_scope = {}",
            match self.reciprocity_scope {
                ReciprocityScope::AllEndpoints => "all",
                ReciprocityScope::FocalOnly => "focal",
            }
        ));
        lines.push(format!("quote_over_reply = {}", self.quote_over_reply));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// First 16 hex digits of the SHA-256 of [`echo`](Self::echo).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        hex::encode(&digest[..8])
    }
}
