use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use xxhash_rust::xxh3::xxh3_64;

use crate::error::{Error, Result};

/// Append-only, content-addressed store of embedding vectors.
///
/// Each record is `key:u64 | check:u64 | dim:u32 | dim × f32`, little endian.
/// `key` is the xxh3 hash of `model \0 text`; `check` is the first eight
/// bytes of its SHA-256 and guards against key collisions.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<u64, (u64, Vec<f32>)>>,
    writer: Mutex<Option<BufWriter<File>>>,
}

fn fingerprint(model: &str, text: &str) -> (u64, u64) {
    let mut material = Vec::with_capacity(model.len() + 1 + text.len());
    material.extend_from_slice(model.as_bytes());
    material.push(0);
    material.extend_from_slice(text.as_bytes());
    let key = xxh3_64(&material);
    let digest = Sha256::digest(&material);
    let check = u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"));
    (key, check)
}

impl EmbeddingCache {
    /// Cache that lives only for the current process.
    pub fn in_memory() -> Self {
        EmbeddingCache {
            path: None,
            entries: Mutex::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Opens (creating if needed) a cache file and loads its records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::file(&path, e))?;
            read_records(BufReader::new(file), &mut entries, &path)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::file(&path, e))?;
        Ok(EmbeddingCache {
            path: Some(path),
            entries: Mutex::new(entries),
            writer: Mutex::new(Some(BufWriter::new(file))),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model: &str, text: &str) -> Option<Vec<f32>> {
        let (key, check) = fingerprint(model, text);
        let entries = self.entries.lock().expect("cache lock poisoned");
        match entries.get(&key) {
            Some((c, v)) if *c == check => Some(v.clone()),
            Some(_) => {
                log::warn!("embedding cache key collision for key {key:016x}; ignoring entry");
                None
            }
            None => None,
        }
    }

    pub fn insert(&self, model: &str, text: &str, vector: &[f32]) -> Result<()> {
        let (key, check) = fingerprint(model, text);
        {
            let mut writer = self.writer.lock().expect("cache lock poisoned");
            if let Some(w) = writer.as_mut() {
                let mut rec = Vec::with_capacity(20 + 4 * vector.len());
                rec.extend_from_slice(&key.to_le_bytes());
                rec.extend_from_slice(&check.to_le_bytes());
                rec.extend_from_slice(&(vector.len() as u32).to_le_bytes());
                for x in vector {
                    rec.extend_from_slice(&x.to_le_bytes());
                }
                w.write_all(&rec)?;
                w.flush()?;
            }
        }
        self.entries
            .lock()
            .expect("cache lock poisoned")
            .insert(key, (check, vector.to_vec()));
        Ok(())
    }
}

fn read_records<R: Read>(mut r: R, entries: &mut HashMap<u64, (u64, Vec<f32>)>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let corrupt = |at: usize| Error::Provider(format!("{}: truncated cache record at byte {at}", path.display()));
    let mut pos = 0;
    while pos < buf.len() {
        if buf.len() - pos < 20 {
            return Err(corrupt(pos));
        }
        let key = u64::from_le_bytes(buf[pos..pos + 8].try_into().unwrap());
        let check = u64::from_le_bytes(buf[pos + 8..pos + 16].try_into().unwrap());
        let dim = u32::from_le_bytes(buf[pos + 16..pos + 20].try_into().unwrap()) as usize;
        let body = pos + 20;
        let end = body + 4 * dim;
        if end > buf.len() {
            return Err(corrupt(pos));
        }
        let v = buf[body..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        entries.insert(key, (check, v));
        pos = end;
    }
    Ok(())
}
