use std::io::{BufRead, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CorpusError;
use crate::dates::DayOffset;

/// One social-media post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    #[serde(rename = "created_at")]
    pub timestamp: DateTime<Utc>,
    pub lang: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_retweet: Option<bool>,
}

impl Tweet {
    /// UTC calendar date of the post.
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    pub fn date_at(&self, offset: DayOffset) -> NaiveDate {
        offset.date_of(&self.timestamp)
    }

    /// Primary language subtag, lowercased (`"pt-BR"` becomes `"pt"`).
    pub fn primary_lang(&self) -> String {
        primary_subtag(&self.lang)
    }
}

pub(crate) fn primary_subtag(tag: &str) -> String {
    tag.trim()
        .split(['-', '_'])
        .next()
        .unwrap_or_default()
        .to_ascii_lowercase()
}

/// Outcome of reading a JSONL corpus: the tweets that parsed and a tally of
/// the lines that did not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTweets {
    pub tweets: Vec<Tweet>,
    pub parse_errors: usize,
    /// 1-based line numbers of rejected lines, capped at the first 100.
    pub error_lines: Vec<usize>,
}

const MAX_REPORTED_ERROR_LINES: usize = 100;

/// Reads newline-delimited JSON tweets. Malformed lines are skipped and
/// counted; blank lines are ignored.
pub fn parse_tweet_jsonl<R: BufRead>(reader: R) -> Result<ParsedTweets, CorpusError> {
    let mut out = ParsedTweets::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match parse_line(trimmed) {
            Some(t) => out.tweets.push(t),
            None => {
                out.parse_errors += 1;
                if out.error_lines.len() < MAX_REPORTED_ERROR_LINES {
                    out.error_lines.push(idx + 1);
                }
            }
        }
    }
    Ok(out)
}

fn parse_line(line: &str) -> Option<Tweet> {
    let v: Value = serde_json::from_str(line).ok()?;
    let obj = v.as_object()?;
    // Twitter ids show up both as strings and as bare integers.
    let id = match obj.get("id")? {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return None,
    };
    if id.is_empty() {
        return None;
    }
    let timestamp = parse_timestamp(obj.get("created_at")?.as_str()?)?;
    let lang = obj.get("lang")?.as_str()?.to_string();
    let text = obj.get("text")?.as_str()?.to_string();
    let is_retweet = match obj.get("is_retweet") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => return None,
    };
    Some(Tweet {
        id,
        timestamp,
        lang,
        text,
        is_retweet,
    })
}

/// Accepts RFC 3339, naive ISO-8601 (taken as UTC) and the legacy Twitter
/// `Sat Feb 01 10:00:00 +0000 2020` form.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y")
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// Writes tweets back out as JSONL, one object per line with LF endings.
pub fn write_tweet_jsonl<W: Write>(tweets: &[Tweet], mut w: W) -> Result<(), CorpusError> {
    for t in tweets {
        serde_json::to_writer(&mut w, t).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
