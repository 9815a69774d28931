//! Encoder inputs: a trainable per-word table or a precomputed binary file.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! header   "CEMB" | version u32 | count u64 | dim u32
//! records  count x ( example_id u64 | position u16 | dim x f32 )
//! index    count x ( example_id u64 | position u16 | record_offset u64 )
//! footer   index_offset u64 | "CIDX"
//! ```
//!
//! `position` is the token's index in the original whitespace-tokenized
//! sentence, so records for stripped function words are simply absent.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CEMB";
pub const INDEX_MAGIC: &[u8; 4] = b"CIDX";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4;
const INDEX_ENTRY_LEN: usize = 8 + 2 + 8;

pub struct EmbeddingWriter {
    out: BufWriter<File>,
    path: PathBuf,
    dim: usize,
    offset: u64,
    index: Vec<(u64, u16, u64)>,
}

impl EmbeddingWriter {
    pub fn create(path: &Path, dim: usize) -> Result<EmbeddingWriter> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = EmbeddingWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            dim,
            offset: HEADER_LEN as u64,
            index: Vec::new(),
        };
        w.header(0)?;
        Ok(w)
    }

    fn io<T>(&self, r: std::io::Result<T>) -> Result<T> {
        r.map_err(|e| Error::io(&self.path, e))
    }

    fn header(&mut self, count: u64) -> Result<()> {
        let mut h = Vec::with_capacity(HEADER_LEN);
        h.extend_from_slice(MAGIC);
        h.extend_from_slice(&VERSION.to_le_bytes());
        h.extend_from_slice(&count.to_le_bytes());
        h.extend_from_slice(&(self.dim as u32).to_le_bytes());
        let r = self.out.write_all(&h);
        self.io(r)
    }

    pub fn write(&mut self, example_id: u64, position: u16, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Config(format!(
                "vector of length {} for dim {}",
                vector.len(),
                self.dim
            )));
        }
        let mut rec = Vec::with_capacity(10 + 4 * self.dim);
        rec.extend_from_slice(&example_id.to_le_bytes());
        rec.extend_from_slice(&position.to_le_bytes());
        for v in vector {
            rec.extend_from_slice(&v.to_le_bytes());
        }
        let r = self.out.write_all(&rec);
        self.io(r)?;
        self.index.push((example_id, position, self.offset));
        self.offset += rec.len() as u64;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        let index_offset = self.offset;
        let mut buf = Vec::with_capacity(self.index.len() * INDEX_ENTRY_LEN + 12);
        for (id, pos, off) in &self.index {
            buf.extend_from_slice(&id.to_le_bytes());
            buf.extend_from_slice(&pos.to_le_bytes());
            buf.extend_from_slice(&off.to_le_bytes());
        }
        buf.extend_from_slice(&index_offset.to_le_bytes());
        buf.extend_from_slice(INDEX_MAGIC);
        let r = self.out.write_all(&buf);
        self.io(r)?;
        let r = self.out.seek(SeekFrom::Start(0));
        self.io(r)?;
        self.header(self.index.len() as u64)?;
        let r = self.out.flush();
        self.io(r)
    }
}

/// A fully loaded embedding file; vectors are frozen.
#[derive(Debug, Clone)]
pub struct EmbeddingFile {
    dim: usize,
    data: Vec<f32>,
    index: HashMap<(u64, u16), usize>,
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

impl EmbeddingFile {
    pub fn open(path: &Path) -> Result<EmbeddingFile> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn from_bytes(b: &[u8], path: &Path) -> Result<EmbeddingFile> {
        let bad = |m: &str| Error::Format {
            path: path.to_path_buf(),
            line: 0,
            message: m.to_string(),
        };
        if b.len() < HEADER_LEN + 12 || &b[..4] != MAGIC || &b[b.len() - 4..] != INDEX_MAGIC {
            return Err(bad("not an embedding file"));
        }
        if read_u32(b, 4) != VERSION {
            return Err(bad("unsupported embedding file version"));
        }
        let count = read_u64(b, 8) as usize;
        let dim = read_u32(b, 16) as usize;
        let index_offset = read_u64(b, b.len() - 12) as usize;
        if index_offset + count * INDEX_ENTRY_LEN + 12 != b.len() {
            return Err(bad("index size does not match header count"));
        }
        let rec_len = 10 + 4 * dim;
        let mut data = Vec::with_capacity(count * dim);
        let mut index = HashMap::with_capacity(count);
        for i in 0..count {
            let at = index_offset + i * INDEX_ENTRY_LEN;
            let id = read_u64(b, at);
            let pos = u16::from_le_bytes([b[at + 8], b[at + 9]]);
            let off = read_u64(b, at + 10) as usize;
            if off + rec_len > index_offset || read_u64(b, off) != id {
                return Err(bad("index entry points outside the record area"));
            }
            let slot = data.len() / dim.max(1);
            for k in 0..dim {
                let v = off + 10 + 4 * k;
                data.push(f32::from_le_bytes(b[v..v + 4].try_into().unwrap()));
            }
            if index.insert((id, pos), slot).is_some() {
                return Err(bad("duplicate (example, position) record"));
            }
        }
        Ok(EmbeddingFile { dim, data, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, example_id: u64, position: u16) -> Option<&[f32]> {
        self.index
            .get(&(example_id, position))
            .map(|&slot| &self.data[slot * self.dim..(slot + 1) * self.dim])
    }

    pub fn keys(&self) -> BTreeSet<(u64, u16)> {
        self.index.keys().copied().collect()
    }
}

/// Word types for the trainable table. Keys are lowercased.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Vocab {
        let set: BTreeSet<String> = words.into_iter().map(str::to_lowercase).collect();
        Vocab::from_words(set.into_iter().collect())
    }

    pub fn from_words(words: Vec<String>) -> Vocab {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(&word.to_lowercase()).copied()
    }
}

/// Encoder input for one example, over content positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    /// Rows of the trainable table.
    Ids(Vec<usize>),
    /// Frozen vectors, row-major `[L x dim]`.
    Vectors { dim: usize, data: Vec<f64> },
}

impl Input {
    pub fn len(&self) -> usize {
        match self {
            Input::Ids(v) => v.len(),
            Input::Vectors { dim, data } => data.len() / dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub enum EmbeddingStore {
    Table { vocab: Vocab, dim: usize },
    File(EmbeddingFile),
}

impl EmbeddingStore {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingStore::Table { dim, .. } => *dim,
            EmbeddingStore::File(f) => f.dim(),
        }
    }

    /// Encoder input for `content_words` at original `positions` of example `example_id`.
    pub fn get_embeddings(&self, example_id: u64, content_words: &[String], positions: &[usize]) -> Result<Input> {
        match self {
            EmbeddingStore::Table { vocab, .. } => content_words
                .iter()
                .map(|w| {
                    vocab
                        .id(w)
                        .ok_or_else(|| Error::MissingEmbedding(format!("word `{w}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Input::Ids),
            EmbeddingStore::File(f) => {
                let mut data = Vec::with_capacity(positions.len() * f.dim());
                for &p in positions {
                    let v = u16::try_from(p)
                        .ok()
                        .and_then(|p16| f.get(example_id, p16))
                        .ok_or_else(|| Error::MissingEmbedding(format!("example {example_id} position {p}")))?;
                    data.extend(v.iter().map(|&x| x as f64));
                }
                Ok(Input::Vectors { dim: f.dim(), data })
            }
        }
    }
}
