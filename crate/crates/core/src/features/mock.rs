//! Deterministic stand-in for a sentence encoder: signed feature hashing of
//! character trigrams.

use std::borrow::Cow;

use unicode_normalization::UnicodeNormalization;

use super::EmbeddingSource;
use crate::corpus::Tweet;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// Hashes the character trigrams of the NFC-normalized text into `dim`
/// signed buckets and L2-normalizes. Text is padded with start/end markers
/// so that one- and two-character strings still produce a trigram.
///
/// Empty text (or `dim == 0`) yields a zero vector.
pub fn mock_embed(text: &str, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    if text.is_empty() || dim == 0 {
        return out;
    }
    let chars: Vec<char> = std::iter::once('\u{2}')
        .chain(text.nfc())
        .chain(std::iter::once('\u{3}'))
        .collect();
    let mut unsigned = vec![0.0; dim];
    let mut buf = [0u8; 12];
    for gram in chars.windows(3) {
        let mut n = 0;
        for c in gram {
            n += c.encode_utf8(&mut buf[n..]).len();
        }
        let h = fnv1a(&buf[..n]);
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        out[bucket] += sign;
        unsigned[bucket] += 1.0;
    }
    let mut norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // every bucket cancelled out; fall back to plain counts
        out = unsigned;
        norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// [`EmbeddingSource`] that embeds tweet text on the fly with [`mock_embed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockEmbedder {
    dim: usize,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Option<Self> {
        (dim > 0).then_some(Self { dim })
    }
}

impl EmbeddingSource for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lookup(&self, tweet: &Tweet) -> Option<Cow<'_, [f32]>> {
        Some(Cow::Owned(
            mock_embed(&tweet.text, self.dim)
                .into_iter()
                .map(|v| v as f32)
                .collect(),
        ))
    }
}
