use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::tweet::{primary_subtag, Tweet};
use super::CorpusError;

fn default_true() -> bool {
    true
}

/// Settings for the tweet filter chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub language: String,
    #[serde(default)]
    pub country_lexicon: Vec<String>,
    #[serde(default = "default_true")]
    pub drop_retweets: bool,
    #[serde(default = "default_true")]
    pub drop_hyperlinks: bool,
    #[serde(default = "default_true")]
    pub drop_duplicates: bool,
}

impl FilterConfig {
    pub fn new(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            country_lexicon: Vec::new(),
            drop_retweets: true,
            drop_hyperlinks: true,
            drop_duplicates: true,
        }
    }

    pub fn with_lexicon<I, S>(mut self, entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.country_lexicon = entries.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.language.trim().is_empty() {
            return Err(CorpusError::Config("language must be nonempty".into()));
        }
        if let Some(pos) = self.country_lexicon.iter().position(|e| e.trim().is_empty()) {
            return Err(CorpusError::Config(format!(
                "country_lexicon entry {pos} is empty"
            )));
        }
        Ok(())
    }
}

/// Reads a country lexicon: one entry per line, `#` starts a comment, blank
/// lines are skipped.
pub fn read_lexicon<R: BufRead>(reader: R) -> Result<Vec<String>, CorpusError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let entry = match line.find('#') {
            Some(i) => &line[..i],
            None => &line[..],
        }
        .trim();
        if !entry.is_empty() {
            out.push(entry.to_string());
        }
    }
    Ok(out)
}

/// Why a tweet was dropped. Variants are listed in the order the rules are
/// tested; the first match wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    WrongLanguage,
    EmptyText,
    Retweet,
    Hyperlink,
    OtherCountry,
    Duplicate,
}

impl RemovalReason {
    pub const ALL: [RemovalReason; 6] = [
        RemovalReason::WrongLanguage,
        RemovalReason::EmptyText,
        RemovalReason::Retweet,
        RemovalReason::Hyperlink,
        RemovalReason::OtherCountry,
        RemovalReason::Duplicate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RemovalReason::WrongLanguage => "wrong_language",
            RemovalReason::EmptyText => "empty_text",
            RemovalReason::Retweet => "retweet",
            RemovalReason::Hyperlink => "hyperlink",
            RemovalReason::OtherCountry => "other_country",
            RemovalReason::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for RemovalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub pre_count: u64,
    pub post_count: u64,
    pub removed_by_reason: BTreeMap<RemovalReason, u64>,
}

impl Default for FilterStats {
    fn default() -> Self {
        Self {
            pre_count: 0,
            post_count: 0,
            removed_by_reason: RemovalReason::ALL.iter().map(|r| (*r, 0)).collect(),
        }
    }
}

impl FilterStats {
    pub fn removed(&self, reason: RemovalReason) -> u64 {
        self.removed_by_reason.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_removed(&self) -> u64 {
        self.removed_by_reason.values().sum()
    }
}

/// Unicode NFC followed by lowercase mapping.
pub(crate) fn casefold(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

fn dedup_key(text: &str) -> String {
    text.trim().nfc().collect()
}

fn is_retweet(t: &Tweet) -> bool {
    t.is_retweet == Some(true) || t.text.trim_start().starts_with("RT @")
}

fn has_hyperlink(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    lower.contains("http://") || lower.contains("https://")
}

struct CompiledFilter<'a> {
    cfg: &'a FilterConfig,
    language: String,
    lexicon: Vec<String>,
}

impl<'a> CompiledFilter<'a> {
    fn new(cfg: &'a FilterConfig) -> Self {
        Self {
            cfg,
            language: primary_subtag(&cfg.language),
            lexicon: cfg.country_lexicon.iter().map(|e| casefold(e.trim())).collect(),
        }
    }

    /// Every rule except duplicates, which needs the sequential pass.
    fn stateless_reason(&self, t: &Tweet) -> Option<RemovalReason> {
        if t.primary_lang() != self.language {
            return Some(RemovalReason::WrongLanguage);
        }
        if t.text.trim().is_empty() {
            return Some(RemovalReason::EmptyText);
        }
        if self.cfg.drop_retweets && is_retweet(t) {
            return Some(RemovalReason::Retweet);
        }
        if self.cfg.drop_hyperlinks && has_hyperlink(&t.text) {
            return Some(RemovalReason::Hyperlink);
        }
        if !self.lexicon.is_empty() {
            let folded = casefold(&t.text);
            if self.lexicon.iter().any(|entry| folded.contains(entry.as_str())) {
                return Some(RemovalReason::OtherCountry);
            }
        }
        None
    }
}

/// Applies the filter chain. Surviving tweets keep their input order and every
/// dropped tweet is tallied under exactly one reason.
///
/// The stateless rules run in parallel; deduplication is a sequential second
/// phase, so the result does not depend on the worker count.
pub fn filter_corpus(tweets: &[Tweet], cfg: &FilterConfig) -> (Vec<Tweet>, FilterStats) {
    let compiled = CompiledFilter::new(cfg);
    let verdicts: Vec<Option<RemovalReason>> =
        tweets.par_iter().map(|t| compiled.stateless_reason(t)).collect();

    let mut stats = FilterStats {
        pre_count: tweets.len() as u64,
        ..FilterStats::default()
    };
    let mut seen: HashSet<String> = HashSet::new();
    let mut kept = Vec::new();
    for (t, verdict) in tweets.iter().zip(verdicts) {
        let reason = verdict.or_else(|| {
            (cfg.drop_duplicates && !seen.insert(dedup_key(&t.text))).then_some(RemovalReason::Duplicate)
        });
        match reason {
            Some(r) => *stats.removed_by_reason.entry(r).or_insert(0) += 1,
            None => kept.push(t.clone()),
        }
    }
    stats.post_count = kept.len() as u64;
    (kept, stats)
}
