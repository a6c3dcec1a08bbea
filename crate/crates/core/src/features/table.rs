use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::daily::keyword_hits;
use super::{pool_embeddings, EmbeddingSource, FeatureError, KeywordSpec, Pooling};
use crate::corpus::{casefold, Tweet};
use crate::dates::{DateRange, DayOffset};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingFeature {
    pub pooling: Pooling,
    /// Expected vector dimension; checked against the embedding source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Which signals make up a day's feature vector. Blocks are always laid out
/// as `[tweet frequency, keyword counts (spec order), pooled embedding]`,
/// skipping the disabled ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default)]
    pub tweet_frequency: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<KeywordSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingFeature>,
    #[serde(default)]
    pub utc_offset: DayOffset,
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !self.tweet_frequency && self.keywords.is_none() && self.embedding.is_none() {
            return Err(FeatureError::Config("no feature source enabled".into()));
        }
        if let Some(k) = &self.keywords {
            k.validate()?;
        }
        if let Some(EmbeddingFeature { dim: Some(0), .. }) = &self.embedding {
            return Err(FeatureError::Config("embedding dim must be positive".into()));
        }
        Ok(())
    }

    /// Resolves the embedding dimension against a source, failing on any
    /// disagreement.
    pub fn embedding_dim(&self, source: Option<&dyn EmbeddingSource>) -> Result<usize, FeatureError> {
        let Some(emb) = &self.embedding else {
            return Ok(0);
        };
        let source = source.ok_or_else(|| {
            FeatureError::Config("embedding features enabled but no embedding source given".into())
        })?;
        match emb.dim {
            Some(d) if d != source.dim() => Err(FeatureError::DimensionConflict {
                configured: d,
                actual: source.dim(),
            }),
            _ => Ok(source.dim()),
        }
    }

    /// Feature column names for an embedding block of `embedding_dim`.
    pub fn column_names(&self, embedding_dim: usize) -> Vec<String> {
        let mut cols = Vec::new();
        if self.tweet_frequency {
            cols.push("freq".to_string());
        }
        if let Some(k) = &self.keywords {
            cols.extend(k.keywords.iter().map(|w| format!("kw:{w}")));
        }
        if self.embedding.is_some() {
            cols.extend((0..embedding_dim).map(|i| format!("emb:{i}")));
        }
        cols
    }
}

/// One day's feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFeatures {
    pub date: NaiveDate,
    pub x: Vec<f64>,
    pub tweet_count: u64,
    /// No tweet contributed to the embedding block (or, without embeddings,
    /// the day had no tweets at all).
    pub empty_day: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayAssembly {
    pub features: DayFeatures,
    /// Tweets skipped for pooling because the source had no vector.
    pub missing_embeddings: usize,
}

/// Builds the feature vector for one day from that day's tweets.
pub fn assemble_day_features(
    cfg: &FeatureConfig,
    tweets: &[&Tweet],
    source: Option<&dyn EmbeddingSource>,
    date: NaiveDate,
) -> Result<DayAssembly, FeatureError> {
    let emb_dim = cfg.embedding_dim(source)?;
    let folded = cfg.keywords.as_ref().map(KeywordSpec::folded);
    Ok(assemble(cfg, tweets, source, emb_dim, folded.as_deref(), date))
}

fn assemble(
    cfg: &FeatureConfig,
    tweets: &[&Tweet],
    source: Option<&dyn EmbeddingSource>,
    emb_dim: usize,
    folded_keywords: Option<&[String]>,
    date: NaiveDate,
) -> DayAssembly {
    let mut x = Vec::new();
    if cfg.tweet_frequency {
        x.push(tweets.len() as f64);
    }
    if let Some(keywords) = folded_keywords {
        let mut hits = vec![0u64; keywords.len()];
        for t in tweets {
            keyword_hits(&casefold(&t.text), keywords, &mut hits);
        }
        x.extend(hits.into_iter().map(|h| h as f64));
    }
    let mut missing = 0;
    let mut empty_day = tweets.is_empty();
    if let (Some(emb), Some(source)) = (&cfg.embedding, source) {
        let vectors: Vec<_> = tweets
            .iter()
            .filter_map(|t| {
                let v = source.lookup(t);
                missing += usize::from(v.is_none());
                v
            })
            .collect();
        empty_day = vectors.is_empty();
        match pool_embeddings(&vectors, emb.pooling) {
            Ok(pooled) => x.extend(pooled),
            Err(_) => x.extend(std::iter::repeat_n(0.0, emb_dim)),
        }
    }
    DayAssembly {
        features: DayFeatures {
            date,
            x,
            tweet_count: tweets.len() as u64,
            empty_day,
        },
        missing_embeddings: missing,
    }
}

/// Per-day feature vectors over a contiguous or gappy set of dates, with
/// named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    /// Sorted by date, at most one row per date.
    pub rows: Vec<DayFeatures>,
    pub missing_embeddings: usize,
}

impl FeatureTable {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, date: NaiveDate) -> Option<&DayFeatures> {
        self.rows
            .binary_search_by_key(&date, |r| r.date)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn empty_days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.rows.iter().filter(|r| r.empty_day).map(|r| r.date)
    }

    /// Writes `date,tweet_count,empty_day,<columns...>` CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FeatureError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["date".to_string(), "tweet_count".into(), "empty_day".into()];
        header.extend(self.columns.iter().cloned());
        wtr.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.date.to_string(),
                r.tweet_count.to_string(),
                u8::from(r.empty_day).to_string(),
            ];
            rec.extend(r.x.iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FeatureError> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let headers = rdr.headers()?.clone();
        let fixed = ["date", "tweet_count", "empty_day"];
        if headers.len() < 4 || headers.iter().take(3).ne(fixed.iter().copied()) {
            return Err(FeatureError::Format {
                line: 1,
                msg: "expected header date,tweet_count,empty_day,<features...>".into(),
            });
        }
        let columns: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
        let mut by_date = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |msg: String| FeatureError::Format { line, msg };
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|_| bad(format!("bad date {:?}", &rec[0])))?;
            let tweet_count = rec[1]
                .parse()
                .map_err(|_| bad(format!("bad tweet_count {:?}", &rec[1])))?;
            let empty_day = match &rec[2] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("bad empty_day {other:?}"))),
            };
            let x = rec
                .iter()
                .skip(3)
                .map(|v| v.parse::<f64>().ok().filter(|f| f.is_finite()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("non-numeric or non-finite feature value".into()))?;
            if x.len() != columns.len() {
                return Err(bad(format!("{} values for {} columns", x.len(), columns.len())));
            }
            let row = DayFeatures {
                date,
                x,
                tweet_count,
                empty_day,
            };
            if by_date.insert(date, row).is_some() {
                return Err(bad(format!("date {date} appears twice")));
            }
        }
        Ok(Self {
            columns,
            rows: by_date.into_values().collect(),
            missing_embeddings: 0,
        })
    }
}

/// Featurizes every day in `range`. Days are independent and assembled in
/// parallel; tweets outside the range are ignored.
pub fn build_feature_table(
    cfg: &FeatureConfig,
    tweets: &[Tweet],
    source: Option<&dyn EmbeddingSource>,
    range: DateRange,
) -> Result<FeatureTable, FeatureError> {
    cfg.validate()?;
    let emb_dim = cfg.embedding_dim(source)?;
    let folded = cfg.keywords.as_ref().map(KeywordSpec::folded);

    let mut per_day: Vec<Vec<&Tweet>> = vec![Vec::new(); range.len()];
    for t in tweets {
        if let Some(i) = range.offset_of(t.date_at(cfg.utc_offset)) {
            per_day[i].push(t);
        }
    }
    let days: Vec<NaiveDate> = range.days().collect();
    let assembled: Vec<DayAssembly> = days
        .par_iter()
        .zip(per_day.par_iter())
        .map(|(date, day_tweets)| assemble(cfg, day_tweets, source, emb_dim, folded.as_deref(), *date))
        .collect();

    let missing_embeddings = assembled.iter().map(|a| a.missing_embeddings).sum();
    Ok(FeatureTable {
        columns: cfg.column_names(emb_dim),
        rows: assembled.into_iter().map(|a| a.features).collect(),
        missing_embeddings,
    })
}
