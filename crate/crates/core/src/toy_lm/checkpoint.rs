//! Binary checkpoint:
//!
//! ```text
//! magic[16] | version u32 | vocab_size u32 | dim u32 | window u32 | ffn_dim u32 | tied u8
//! | n_tokens u32 | (len u32, utf8 bytes)* | n_params u64 | f64 * n_params
//! ```
//!
//! Integers and floats are little-endian. Tokens are the non-reserved
//! vocabulary entries in id order.

use std::io::{Read, Write};
use std::path::Path;

use super::model::{Layout, ModelConfig, ToyLmModel};
use super::vocab::Vocab;
use super::ToyLmError;

pub const CHECKPOINT_MAGIC: &[u8; 16] = b"SUMMACT-TOYLM\0\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

fn err<E: std::fmt::Display>(e: E) -> ToyLmError {
    ToyLmError::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(mut w: W, model: &ToyLmModel, vocab: &Vocab) -> Result<(), ToyLmError> {
    let c = &model.config;
    if vocab.len() != c.vocab_size {
        return Err(err(format!(
            "vocabulary has {} entries, model expects {}",
            vocab.len(),
            c.vocab_size
        )));
    }
    let mut buf = Vec::with_capacity(64 + model.params.len() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for x in [c.vocab_size, c.dim, c.window, c.ffn_dim] {
        buf.extend_from_slice(&(x as u32).to_le_bytes());
    }
    buf.push(c.tied_output as u8);
    buf.extend_from_slice(&(vocab.tokens().len() as u32).to_le_bytes());
    for t in vocab.tokens() {
        buf.extend_from_slice(&(t.len() as u32).to_le_bytes());
        buf.extend_from_slice(t.as_bytes());
    }
    buf.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf).map_err(err)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ToyLmError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| err("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ToyLmError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ToyLmError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ToyLmModel, Vocab), ToyLmError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(err)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(16)? != CHECKPOINT_MAGIC {
        return Err(err("bad magic header"));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(err(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let vocab_size = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let window = c.u32()? as usize;
    let ffn_dim = c.u32()? as usize;
    let tied_output = match c.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(err(format!("bad tied flag {b}"))),
    };
    let config = ModelConfig {
        vocab_size,
        dim,
        window,
        ffn_dim,
        tied_output,
    };
    config.validate()?;
    let n_tokens = c.u32()? as usize;
    let mut tokens = Vec::with_capacity(n_tokens.min(1 << 16));
    for _ in 0..n_tokens {
        let len = c.u32()? as usize;
        let bytes = c.take(len)?;
        tokens.push(String::from_utf8(bytes.to_vec()).map_err(err)?);
    }
    let vocab = Vocab::from_tokens(tokens)?;
    if vocab.len() != vocab_size {
        return Err(err("vocabulary size does not match config"));
    }
    let n_params = c.u64()? as usize;
    if n_params != Layout::new(&config).len {
        return Err(err(format!(
            "expected {} parameters, header says {n_params}",
            Layout::new(&config).len
        )));
    }
    let raw = c.take(n_params.checked_mul(8).ok_or_else(|| err("parameter count overflow"))?)?;
    let params: Vec<f64> = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    if c.pos != buf.len() {
        return Err(err("trailing bytes after parameters"));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(err("non-finite parameter"));
    }
    Ok((ToyLmModel { config, params }, vocab))
}

pub fn save_checkpoint(path: &Path, model: &ToyLmModel, vocab: &Vocab) -> Result<(), ToyLmError> {
    let f = std::fs::File::create(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    write_checkpoint(std::io::BufWriter::new(f), model, vocab)
}

pub fn load_checkpoint(path: &Path) -> Result<(ToyLmModel, Vocab), ToyLmError> {
    let f = std::fs::File::open(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    read_checkpoint(std::io::BufReader::new(f))
}
