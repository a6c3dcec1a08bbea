//! Tweet corpus ingestion, the filter chain, and reported case-count series.

mod cases;
mod filter;
mod tweet;

use thiserror::Error;

pub use cases::{
    cumulative_totals, derive_new_cases, parse_case_csv_jhu_wide, parse_case_csv_long, write_case_csv_long,
    CaseMode, CaseSeries, ParsedCases,
};
pub(crate) use filter::casefold;
pub use filter::{filter_corpus, read_lexicon, FilterConfig, FilterStats, RemovalReason};
pub use tweet::{parse_timestamp, parse_tweet_jsonl, write_tweet_jsonl, ParsedTweets, Tweet};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error at line {line}: {msg}")]
    Format { line: u64, msg: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("country {0:?} not found")]
    NotFound(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
}
