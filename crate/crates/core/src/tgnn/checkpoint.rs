use std::io::{Read, Write};
use std::path::Path;

use super::params::{TgnnDims, TgnnParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TEGDOCCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Writes magic, version, the five dimensions as `u32`, then every tensor
/// row-major as little-endian `f64`.
pub fn write_checkpoint<W: Write>(mut w: W, theta: &TgnnParams) -> Result<()> {
    theta.validate()?;
    let d = theta.dims();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for x in [d.d_h, d.d_node, d.d_edge, d.d_doc, d.n_out] {
        w.write_all(&(x as u32).to_le_bytes())?;
    }
    for t in theta.tensors() {
        let mut buf = Vec::with_capacity(t.len() * 8);
        for x in t {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<TgnnParams> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 8 + 4 + 20 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::BadCheckpoint("missing magic header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(8);
    if version != CHECKPOINT_VERSION {
        return Err(Error::BadCheckpoint(format!("unsupported version {version}")));
    }
    let dims = TgnnDims {
        d_h: word(12) as usize,
        d_node: word(16) as usize,
        d_edge: word(20) as usize,
        d_doc: word(24) as usize,
        n_out: word(28) as usize,
    };
    let mut theta = TgnnParams::zeros(dims);
    let expected = 32 + 8 * theta.param_count();
    if bytes.len() != expected {
        return Err(Error::BadCheckpoint(format!(
            "expected {expected} bytes for dims {dims:?}, found {}",
            bytes.len()
        )));
    }
    let mut pos = 32;
    for t in theta.tensors_mut() {
        for x in t.iter_mut() {
            *x = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            pos += 8;
        }
    }
    if !theta.is_finite() {
        return Err(Error::BadCheckpoint("non-finite parameter".into()));
    }
    theta.validate()?;
    Ok(theta)
}

pub fn save_checkpoint(path: &Path, theta: &TgnnParams) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, theta)?;
    crate::io::write_atomic(path, &buf)
}

pub fn load_checkpoint(path: &Path) -> Result<TgnnParams> {
    let f = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_checkpoint(std::io::BufReader::new(f))
}
