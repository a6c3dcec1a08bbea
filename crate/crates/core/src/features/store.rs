//! EMB1: a little-endian binary map from tweet id to a float32 vector.
//!
//! ```text
//! "EMB1" | version u8 = 1 | dim u32 | count u64 | count × (id_len u16 | id | dim × f32)
//! ```

use std::io::{Read, Write};

use indexmap::IndexMap;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 8;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("EMB1 format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },
    #[error("invalid embedding: {0}")]
    Invalid(String),
}

/// Per-tweet embedding vectors of one fixed dimension. Iteration follows
/// insertion order; equality ignores it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, StoreError> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(StoreError::Invalid(format!("dimension {dim} out of range")));
        }
        Ok(Self {
            dim,
            entries: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces a vector. Returns `true` if the id was already
    /// present.
    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f32>) -> Result<bool, StoreError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(StoreError::Invalid(format!(
                "vector for {id:?} has {} components, store dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if id.len() > u16::MAX as usize {
            return Err(StoreError::Invalid(format!(
                "id of {} bytes is too long",
                id.len()
            )));
        }
        if let Some(i) = vector.iter().position(|v| !v.is_finite()) {
            return Err(StoreError::Invalid(format!(
                "component {i} of {id:?} is not finite"
            )));
        }
        Ok(self.entries.insert(id, vector).is_some())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

#[derive(Debug, Clone)]
pub struct LoadedStore {
    pub store: EmbeddingStore,
    /// One entry per repeated id (the later record replaces the earlier).
    pub warnings: Vec<String>,
}

struct Bytes<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Bytes<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], StoreError> {
        if self.buf.len() - self.pos < n {
            return Err(StoreError::Format {
                offset: self.pos as u64,
                msg: format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.buf.len() - self.pos
                ),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

fn format_err(offset: usize, msg: impl Into<String>) -> StoreError {
    StoreError::Format {
        offset: offset as u64,
        msg: msg.into(),
    }
}

pub fn read_embedding_store<R: Read>(mut reader: R) -> Result<LoadedStore, StoreError> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    decode(&buf)
}

fn decode(buf: &[u8]) -> Result<LoadedStore, StoreError> {
    let mut b = Bytes { buf, pos: 0 };
    if b.take(4, "magic")? != MAGIC {
        return Err(format_err(0, "bad magic, expected \"EMB1\""));
    }
    let version = b.take(1, "version")?[0];
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(b.take(4, "dim")?.try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(format_err(5, "dim must be positive"));
    }
    let count = u64::from_le_bytes(b.take(8, "record count")?.try_into().unwrap());
    debug_assert_eq!(b.pos, HEADER_LEN);

    let mut store = EmbeddingStore::new(dim)?;
    let mut warnings = Vec::new();
    for rec in 0..count {
        let start = b.pos;
        let body = (|| {
            let id_len = u16::from_le_bytes(b.take(2, "id length")?.try_into().unwrap()) as usize;
            let id_bytes = b.take(id_len, "id")?;
            let floats = b.take(dim * 4, "vector")?;
            Ok::<_, StoreError>((id_bytes, floats))
        })();
        let (id_bytes, floats) = body.map_err(|e| match e {
            StoreError::Format { offset, msg } => {
                format_err(start, format!("record {rec}: {msg} (at byte {offset})"))
            }
            other => other,
        })?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| format_err(start + 2, format!("record {rec}: id is not UTF-8")))?;
        let vector: Vec<f32> = floats
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(i) = vector.iter().position(|v| !v.is_finite()) {
            return Err(format_err(
                start + 2 + id_bytes.len() + 4 * i,
                format!("record {rec}: component {i} is not finite"),
            ));
        }
        if store.insert(id, vector)? {
            warnings.push(format!("duplicate id {id:?} at record {rec}; last record wins"));
        }
    }
    if b.pos != buf.len() {
        return Err(format_err(
            b.pos,
            format!("{} trailing bytes after {count} records", buf.len() - b.pos),
        ));
    }
    Ok(LoadedStore { store, warnings })
}

pub fn write_embedding_store<W: Write>(store: &EmbeddingStore, mut w: W) -> Result<(), StoreError> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.push(VERSION);
    header.extend_from_slice(&(store.dim as u32).to_le_bytes());
    header.extend_from_slice(&(store.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut rec = Vec::with_capacity(2 + 32 + 4 * store.dim);
    for (id, v) in store.iter() {
        rec.clear();
        rec.extend_from_slice(&(id.len() as u16).to_le_bytes());
        rec.extend_from_slice(id.as_bytes());
        for x in v {
            rec.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(store: &EmbeddingStore) -> Vec<u8> {
        let mut buf = Vec::new();
        write_embedding_store(store, &mut buf).unwrap();
        buf
    }

    fn offset_of(err: StoreError) -> u64 {
        match err {
            StoreError::Format { offset, .. } => offset,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_small() {
        let mut s = EmbeddingStore::new(2).unwrap();
        s.insert("a", vec![1.5, -2.0]).unwrap();
        let bytes = encode(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 2 + 1 + 8);
        let back = read_embedding_store(bytes.as_slice()).unwrap();
        assert_eq!(back.store, s);
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn empty_store_roundtrip() {
        let s = EmbeddingStore::new(3).unwrap();
        let back = read_embedding_store(encode(&s).as_slice()).unwrap().store;
        assert_eq!(back, s);
        assert!(back.is_empty());
    }

    #[test]
    fn bad_magic_at_zero() {
        let mut bytes = encode(&EmbeddingStore::new(2).unwrap());
        bytes[..4].copy_from_slice(b"XXXX");
        assert_eq!(offset_of(read_embedding_store(bytes.as_slice()).unwrap_err()), 0);
    }

    #[test]
    fn zero_dim_rejected() {
        let mut bytes = encode(&EmbeddingStore::new(2).unwrap());
        bytes[5..9].copy_from_slice(&0u32.to_le_bytes());
        assert_eq!(offset_of(read_embedding_store(bytes.as_slice()).unwrap_err()), 5);
        assert!(EmbeddingStore::new(0).is_err());
    }

    #[test]
    fn bad_version() {
        let mut bytes = encode(&EmbeddingStore::new(2).unwrap());
        bytes[4] = 2;
        assert_eq!(offset_of(read_embedding_store(bytes.as_slice()).unwrap_err()), 4);
    }

    #[test]
    fn truncated_record_reports_record_start() {
        let mut s = EmbeddingStore::new(2).unwrap();
        s.insert("a", vec![1.0, 2.0]).unwrap();
        s.insert("bb", vec![3.0, 4.0]).unwrap();
        let bytes = encode(&s);
        let second = HEADER_LEN + 2 + 1 + 8;
        let cut = &bytes[..bytes.len() - 3];
        assert_eq!(offset_of(read_embedding_store(cut).unwrap_err()), second as u64);
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode(&EmbeddingStore::new(1).unwrap());
        bytes.push(0);
        assert_eq!(
            offset_of(read_embedding_store(bytes.as_slice()).unwrap_err()),
            HEADER_LEN as u64
        );
    }

    #[test]
    fn duplicate_id_last_wins() {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.push(VERSION);
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&2u64.to_le_bytes());
        for v in [1.0f32, 7.0] {
            buf.extend_from_slice(&1u16.to_le_bytes());
            buf.push(b'x');
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let loaded = read_embedding_store(buf.as_slice()).unwrap();
        assert_eq!(loaded.store.get("x"), Some(&[7.0f32][..]));
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn nan_component_rejected() {
        let mut s = EmbeddingStore::new(1).unwrap();
        s.insert("a", vec![0.0]).unwrap();
        let mut bytes = encode(&s);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(
            offset_of(read_embedding_store(bytes.as_slice()).unwrap_err()),
            (n - 4) as u64
        );
        assert!(s.insert("b", vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn insert_checks_dim() {
        let mut s = EmbeddingStore::new(2).unwrap();
        assert!(s.insert("a", vec![1.0]).is_err());
    }
}
