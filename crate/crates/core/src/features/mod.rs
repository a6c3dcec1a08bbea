//! Daily feature vectors: tweet frequency and keyword counts (macro signals)
//! concatenated with pooled per-tweet embeddings (micro signals).

mod daily;
mod mock;
mod pool;
mod store;
mod table;

use std::borrow::Cow;

use thiserror::Error;

use crate::corpus::Tweet;

pub use daily::{daily_keyword_counts, daily_tweet_frequency, KeywordSpec, MatchMode};
pub use mock::{mock_embed, MockEmbedder};
pub use pool::{pool_embeddings, Pooling};
pub use store::{read_embedding_store, write_embedding_store, EmbeddingStore, LoadedStore, StoreError};
pub use table::{
    assemble_day_features, build_feature_table, DayAssembly, DayFeatures, EmbeddingFeature, FeatureConfig,
    FeatureTable,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error at line {line}: {msg}")]
    Format { line: u64, msg: String },
    #[error("invalid feature configuration: {0}")]
    Config(String),
    #[error("embedding dimension conflict: config says {configured}, source has {actual}")]
    DimensionConflict { configured: usize, actual: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Something that can hand out a vector for a tweet.
pub trait EmbeddingSource: Sync {
    fn dim(&self) -> usize;

    /// `None` when the tweet has no vector.
    fn lookup(&self, tweet: &Tweet) -> Option<Cow<'_, [f32]>>;
}

impl EmbeddingSource for EmbeddingStore {
    fn dim(&self) -> usize {
        EmbeddingStore::dim(self)
    }

    fn lookup(&self, tweet: &Tweet) -> Option<Cow<'_, [f32]>> {
        self.get(&tweet.id).map(Cow::Borrowed)
    }
}
