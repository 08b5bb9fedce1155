//! Versioned binary checkpoints holding a full [`Translator`]: model
//! config, both vocabularies, and all parameter tensors.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "LXAUGCKP"
//! version      u32      currently 1
//! config       u32 embed_dim, u32 hidden_dim,
//!              u32 src_vocab_size, u32 tgt_vocab_size, u64 init_seed
//! src vocab    u32 count, then per token u32 byte-length + UTF-8 bytes
//! tgt vocab    same layout
//! tensors      25 sections, in Params::TENSOR_NAMES order:
//!              u32 rows, u32 cols, rows*cols f64 values (row-major)
//! ```
//!
//! Every value is written with explicit byte order and every transcendental
//! used in training is computed in portable arithmetic, so a run with the
//! same seeds and data produces a byte-identical file on any platform.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::Vocab;

use super::beam::Translator;
use super::model::{Model, ModelConfig, Params};

const MAGIC: &[u8; 8] = b"LXAUGCKP";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_vocab(out: &mut Vec<u8>, vocab: &Vocab) {
    push_u32(out, vocab.len() as u32);
    for id in 0..vocab.len() as u32 {
        let token = vocab.token(id).expect("id in range");
        push_u32(out, token.len() as u32);
        out.extend_from_slice(token.as_bytes());
    }
}

/// Serializes `translator` to `path`, overwriting any existing file.
pub fn save_checkpoint(path: &Path, translator: &Translator) -> Result<(), CheckpointError> {
    let model = &translator.model;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, model.config.embed_dim as u32);
    push_u32(&mut out, model.config.hidden_dim as u32);
    push_u32(&mut out, model.config.src_vocab_size as u32);
    push_u32(&mut out, model.config.tgt_vocab_size as u32);
    push_u64(&mut out, model.config.init_seed);
    push_vocab(&mut out, &translator.src_vocab);
    push_vocab(&mut out, &translator.tgt_vocab);
    for tensor in model.params.tensors() {
        push_u32(&mut out, tensor.rows() as u32);
        push_u32(&mut out, tensor.cols() as u32);
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Corrupt(format!(
                "truncated at byte {} (wanted {} more)",
                self.pos, n
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn vocab(&mut self, path: &Path) -> Result<Vocab, CheckpointError> {
        let count = self.u32()? as usize;
        let mut lines = Vec::with_capacity(count);
        for _ in 0..count {
            let len = self.u32()? as usize;
            let raw = self.take(len)?;
            let token = std::str::from_utf8(raw)
                .map_err(|_| CheckpointError::Corrupt("vocab token is not UTF-8".into()))?;
            lines.push(token.to_string());
        }
        Vocab::from_lines(&lines, path)
            .map_err(|e| CheckpointError::Corrupt(format!("bad vocab section: {e}")))
    }
}

/// Reads a checkpoint back into a ready-to-use [`Translator`], validating
/// magic, version, shape consistency, and parameter finiteness.
pub fn load_checkpoint(path: &Path) -> Result<Translator, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let config = ModelConfig {
        embed_dim: r.u32()? as usize,
        hidden_dim: r.u32()? as usize,
        src_vocab_size: r.u32()? as usize,
        tgt_vocab_size: r.u32()? as usize,
        init_seed: r.u64()?,
    };
    let src_vocab = r.vocab(path)?;
    let tgt_vocab = r.vocab(path)?;
    if src_vocab.len() != config.src_vocab_size {
        return Err(CheckpointError::Corrupt(format!(
            "source vocab has {} entries but config says {}",
            src_vocab.len(),
            config.src_vocab_size
        )));
    }
    if tgt_vocab.len() != config.tgt_vocab_size {
        return Err(CheckpointError::Corrupt(format!(
            "target vocab has {} entries but config says {}",
            tgt_vocab.len(),
            config.tgt_vocab_size
        )));
    }

    let mut params = Params::zeros(&config);
    for (name, tensor) in Params::TENSOR_NAMES.iter().zip(params.tensors_mut()) {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if rows != tensor.rows() || cols != tensor.cols() {
            return Err(CheckpointError::Corrupt(format!(
                "tensor {name} has shape {rows}x{cols}, expected {}x{}",
                tensor.rows(),
                tensor.cols()
            )));
        }
        for v in tensor.data_mut() {
            let x = r.f64()?;
            if !x.is_finite() {
                return Err(CheckpointError::Corrupt(format!(
                    "tensor {name} contains a non-finite value"
                )));
            }
            *v = x;
        }
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Corrupt(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - r.pos
        )));
    }
    Ok(Translator {
        model: Model { config, params },
        src_vocab,
        tgt_vocab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, Sentence};
    use crate::nmt::model::init_model;

    fn sample_translator() -> Translator {
        let sentences = [
            Sentence::from_tokens(["guten", "tag", "welt"]).unwrap(),
            Sentence::from_tokens(["good", "day", "world"]).unwrap(),
        ];
        let src_vocab = build_vocab(&sentences[..1], None, 1);
        let tgt_vocab = build_vocab(&sentences[1..], None, 1);
        let model = init_model(&ModelConfig {
            embed_dim: 3,
            hidden_dim: 4,
            src_vocab_size: src_vocab.len(),
            tgt_vocab_size: tgt_vocab.len(),
            init_seed: 21,
        });
        Translator {
            model,
            src_vocab,
            tgt_vocab,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample_translator();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &t).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, t);
    }

    #[test]
    fn same_translator_same_bytes() {
        let t = sample_translator();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        save_checkpoint(&a, &t).unwrap();
        save_checkpoint(&b, &t).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn rejects_foreign_and_tampered_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::BadMagic)
        ));

        let t = sample_translator();
        let good = dir.path().join("good.ckpt");
        save_checkpoint(&good, &t).unwrap();
        let mut bytes = fs::read(&good).unwrap();

        // Wrong version.
        let mut wrong_version = bytes.clone();
        wrong_version[8..12].copy_from_slice(&9u32.to_le_bytes());
        fs::write(&path, &wrong_version).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::UnsupportedVersion(9))
        ));

        // Truncated tensor data.
        bytes.truncate(bytes.len() - 5);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Corrupt(_))
        ));

        // Non-finite parameter value.
        let mut poisoned = fs::read(&good).unwrap();
        let len = poisoned.len();
        poisoned[len - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        fs::write(&path, &poisoned).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("non-finite"));

        // Trailing garbage.
        let mut padded = fs::read(&good).unwrap();
        padded.push(0);
        fs::write(&path, &padded).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("trailing"));
    }

    #[test]
    fn loaded_model_translates_identically() {
        let t = sample_translator();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &t).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        let sent = Sentence::from_tokens(["guten", "welt"]).unwrap();
        let dc = crate::nmt::DecodeConfig::default();
        assert_eq!(t.translate(&sent, &dc), loaded.translate(&sent, &dc));
    }
}
