use std::borrow::Cow;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::cache::EmbeddingCache;
use super::EmbeddingProvider;
use crate::error::{Error, Result};

/// Environment variable holding the bearer token for remote providers.
pub const API_KEY_ENV: &str = "TEGDOC_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub dim: usize,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub char_budget: usize,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub batch_size: usize,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "https://api.openai.com/v1/embeddings".into(),
            model: "text-embedding-3-large".into(),
            dim: 3072,
            api_key: None,
            char_budget: 24_000,
            max_attempts: 3,
            initial_backoff_ms: 500,
            batch_size: 64,
            timeout_secs: 60,
        }
    }
}

impl RemoteConfig {
    /// Fills `api_key` from [`API_KEY_ENV`] when unset.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    input: &'a [Cow<'a, str>],
}

#[derive(Deserialize)]
struct Response {
    data: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    index: usize,
    embedding: Vec<f64>,
}

/// Cuts `text` at the last whitespace before `budget` characters.
pub fn truncate_to_budget(text: &str, budget: usize) -> Cow<'_, str> {
    let Some((cut, _)) = text.char_indices().nth(budget) else {
        return Cow::Borrowed(text);
    };
    let prefix = &text[..cut];
    let end = prefix
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, _)| i)
        .filter(|&i| i > 0)
        .unwrap_or(cut);
    log::warn!(
        "truncating {}-character text to {} characters for the embedding provider",
        text.chars().count(),
        text[..end].chars().count()
    );
    Cow::Owned(text[..end].to_string())
}

/// OpenAI-compatible embedding endpoint with write-through caching.
pub struct RemoteProvider {
    cfg: RemoteConfig,
    client: reqwest::blocking::Client,
    cache: Arc<EmbeddingCache>,
    calls: AtomicUsize,
}

impl RemoteProvider {
    pub fn new(cfg: RemoteConfig, cache: Arc<EmbeddingCache>) -> Result<Self> {
        if cfg.dim == 0 || cfg.batch_size == 0 || cfg.max_attempts == 0 {
            return Err(Error::InvalidArgument(
                "remote provider needs positive dim, batch_size and max_attempts".into(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(RemoteProvider {
            cfg,
            client,
            cache,
            calls: AtomicUsize::new(0),
        })
    }

    /// Number of HTTP requests issued so far, retries included.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn request(&self, inputs: &[Cow<'_, str>]) -> Result<Vec<Vec<f32>>> {
        let body = Request {
            model: &self.cfg.model,
            input: inputs,
        };
        let mut backoff = Duration::from_millis(self.cfg.initial_backoff_ms);
        let mut last_err = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut req = self.client.post(&self.cfg.endpoint).json(&body);
            if let Some(key) = &self.cfg.api_key {
                req = req.bearer_auth(key);
            }
            match req.send().and_then(|r| r.error_for_status()) {
                Ok(resp) => {
                    let parsed: Response = resp.json().map_err(|e| Error::Provider(e.to_string()))?;
                    return self.unpack(parsed, inputs.len());
                }
                Err(e) => {
                    last_err = e.to_string();
                    log::warn!("embedding request attempt {attempt} failed: {last_err}");
                    if attempt < self.cfg.max_attempts {
                        std::thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(Error::Provider(format!(
            "giving up after {} attempts: {last_err}",
            self.cfg.max_attempts
        )))
    }

    fn unpack(&self, mut resp: Response, expected: usize) -> Result<Vec<Vec<f32>>> {
        resp.data.sort_by_key(|d| d.index);
        if resp.data.len() != expected || resp.data.iter().enumerate().any(|(i, d)| d.index != i) {
            return Err(Error::Provider(format!(
                "expected embeddings for indices 0..{expected}, got {} items",
                resp.data.len()
            )));
        }
        resp.data
            .into_iter()
            .map(|d| {
                if d.embedding.len() != self.cfg.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.cfg.dim,
                        got: d.embedding.len(),
                    });
                }
                let norm = d.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
                Ok(d.embedding.iter().map(|x| (x * scale) as f32).collect())
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn name(&self) -> &str {
        &self.cfg.model
    }

    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        let mut out: Vec<Option<Vec<f32>>> = texts.iter().map(|t| self.cache.get(&self.cfg.model, t)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        for chunk in missing.chunks(self.cfg.batch_size) {
            let inputs: Vec<Cow<'_, str>> = chunk
                .iter()
                .map(|&i| truncate_to_budget(texts[i], self.cfg.char_budget))
                .collect();
            let vectors = self.request(&inputs)?;
            for (&i, v) in chunk.iter().zip(vectors) {
                self.cache.insert(&self.cfg.model, texts[i], &v)?;
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every slot filled")).collect())
    }
}
