//! Versioned binary checkpoints, little-endian.
//!
//! ```text
//! "CNCA" | version u32 | K u32 | D u32 | H u32 | C u32 | embed_dim u32 | vocab u32 | type-table hash u64
//! tensors in declaration order (emb, enc, codebook, conv_w, conv_b, out_w, out_b, ln_g, ln_b, readout), f32
//! vocab section: vocab x ( byte_len u32 | utf-8 word )
//! ```

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::embeddings::Vocab;
use crate::error::{Error, Result};
use crate::neural::model::{NcaConfig, NcaModel, Params};

pub const MAGIC: &[u8; 4] = b"CNCA";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: NcaModel,
    pub type_table_hash: u64,
    pub vocab: Vocab,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.model.cfg;
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        for v in [
            VERSION,
            c.k as u32,
            c.d as u32,
            c.h as u32,
            c.c as u32,
            c.embed_dim as u32,
            c.vocab_size as u32,
        ] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&self.type_table_hash.to_le_bytes());
        for (_, t) in self.model.params.tensors() {
            for &x in t {
                b.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        for w in self.vocab.words() {
            b.extend_from_slice(&(w.len() as u32).to_le_bytes());
            b.extend_from_slice(w.as_bytes());
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Checkpoint> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let u32_at = |at: usize| -> Result<u32> {
            b.get(at..at + 4)
                .map(|s| u32::from_le_bytes(s.try_into().unwrap()))
                .ok_or_else(|| bad("truncated"))
        };
        if b.get(..4) != Some(MAGIC.as_slice()) {
            return Err(bad("bad magic"));
        }
        if u32_at(4)? != VERSION {
            return Err(bad("unsupported version"));
        }
        let dims: Vec<usize> = (0..6)
            .map(|i| u32_at(8 + 4 * i).map(|v| v as usize))
            .collect::<Result<_>>()?;
        let cfg = NcaConfig::new(dims[0], dims[1], dims[2], dims[3], dims[4], dims[5]);
        cfg.validate()?;
        let hash = b
            .get(32..40)
            .map(|s| u64::from_le_bytes(s.try_into().unwrap()))
            .ok_or_else(|| bad("truncated"))?;
        let mut at = 40;
        let mut params = Params::zeros(&cfg);
        for (_, t) in params.tensors_mut() {
            let end = at + 4 * t.len();
            let src = b.get(at..end).ok_or_else(|| bad("truncated tensor data"))?;
            for (x, ch) in t.iter_mut().zip(src.chunks_exact(4)) {
                *x = f32::from_le_bytes(ch.try_into().unwrap()) as f64;
            }
            at = end;
        }
        let mut words = Vec::with_capacity(cfg.vocab_size);
        for _ in 0..cfg.vocab_size {
            let n = u32_at(at)? as usize;
            let s = b.get(at + 4..at + 4 + n).ok_or_else(|| bad("truncated vocab"))?;
            words.push(String::from_utf8(s.to_vec()).map_err(|_| bad("vocab is not utf-8"))?);
            at += 4 + n;
        }
        if at != b.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Checkpoint {
            model: NcaModel { cfg, params },
            type_table_hash: hash,
            vocab: Vocab::from_words(words),
        })
    }

    /// Writes to a sibling temp file, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let b = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&b)
    }

    pub fn sha256_hex(&self) -> String {
        Sha256::digest(self.to_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
