use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::{casefold, Tweet};
use crate::dates::{DateRange, DayOffset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    SubstringCasefold,
}

/// Ordered keyword list. Doubles as the on-disk keyword config
/// (`{"language": "it", "keywords": [...]}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    pub keywords: Vec<String>,
    #[serde(default)]
    pub match_mode: MatchMode,
}

impl KeywordSpec {
    pub fn new<I, S>(keywords: I) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let spec = Self {
            language: None,
            keywords: keywords.into_iter().map(Into::into).collect(),
            match_mode: MatchMode::SubstringCasefold,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.keywords.is_empty() {
            return Err(FeatureError::Config("keyword list is empty".into()));
        }
        let mut seen = HashSet::new();
        for k in &self.keywords {
            let folded = casefold(k.trim());
            if folded.is_empty() {
                return Err(FeatureError::Config("keyword entries must be nonempty".into()));
            }
            if !seen.insert(folded) {
                return Err(FeatureError::Config(format!(
                    "keyword {k:?} repeats an earlier entry after case folding"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn folded(&self) -> Vec<String> {
        self.keywords.iter().map(|k| casefold(k.trim())).collect()
    }
}

/// Number of tweets containing each keyword; a tweet counts at most once
/// per keyword.
pub(crate) fn keyword_hits(folded_text: &str, folded_keywords: &[String], out: &mut [u64]) {
    for (slot, k) in out.iter_mut().zip(folded_keywords) {
        if folded_text.contains(k.as_str()) {
            *slot += 1;
        }
    }
}

/// Tweets per day over `range`; days without tweets are present with 0.
pub fn daily_tweet_frequency(
    tweets: &[Tweet],
    range: DateRange,
    offset: DayOffset,
) -> BTreeMap<NaiveDate, u64> {
    let mut out: BTreeMap<NaiveDate, u64> = range.days().map(|d| (d, 0)).collect();
    for t in tweets {
        if let Some(n) = out.get_mut(&t.date_at(offset)) {
            *n += 1;
        }
    }
    out
}

/// Per-day counts of tweets containing each keyword, in spec order.
pub fn daily_keyword_counts(
    tweets: &[Tweet],
    spec: &KeywordSpec,
    range: DateRange,
    offset: DayOffset,
) -> BTreeMap<NaiveDate, Vec<u64>> {
    let folded = spec.folded();
    let mut out: BTreeMap<NaiveDate, Vec<u64>> = range.days().map(|d| (d, vec![0; folded.len()])).collect();
    for t in tweets {
        if let Some(row) = out.get_mut(&t.date_at(offset)) {
            keyword_hits(&casefold(&t.text), &folded, row);
        }
    }
    out
}
