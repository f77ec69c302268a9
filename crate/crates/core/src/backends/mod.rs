//! Text-generation and embedding backends.
//!
//! The pipeline talks to language models only through [`TextGenerator`] and
//! [`Embedder`]. [`MockBackend`] is a deterministic rule table plus a hashed
//! bag-of-words embedder; [`HttpBackend`] speaks the common chat-completion
//! and embeddings JSON shapes.

mod http;
mod mock;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompting::PromptText;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockRule, MOCK_DIMENSION, UNMATCHED};

pub const DEFAULT_API_KEY_ENV: &str = "SUMMACT_API_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("{request}: timed out")]
    Timeout { request: String },
    #[error("{request}: HTTP status {code}")]
    HttpStatus { request: String, code: u16 },
    #[error("{request}: malformed response: {message}")]
    MalformedResponse { request: String, message: String },
    #[error("{request}: API key environment variable {var} is not set")]
    AuthMissing { request: String, var: String },
    #[error("{request}: {message}")]
    Transport { request: String, message: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            max_tokens: 256,
            model_name: "default".into(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0) {
            return Err(BackendError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::Config("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_base_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_concurrent: usize,
    pub retry: RetryPolicy,
    pub model: String,
    pub embedding_model: String,
    pub mock_rules: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            base_url: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 60.0,
            max_concurrent: 4,
            retry: RetryPolicy::default(),
            model: "default".into(),
            embedding_model: "default".into(),
            mock_rules: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.kind == BackendKind::Http && self.base_url.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::Config("HTTP backend requires base_url".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(BackendError::Config("timeout must be > 0".into()));
        }
        if self.max_concurrent == 0 {
            return Err(BackendError::Config("max_concurrent must be >= 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(BackendError::Config("retry.max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

pub trait TextGenerator: Send + Sync {
    fn generate(&self, prompt: &PromptText, params: &GenerationParams) -> Result<String, BackendError>;
}

pub trait Embedder: Send + Sync {
    /// One vector per input text, in input order, all of equal dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;

    /// Identifies the embedding space (backend and model).
    fn fingerprint(&self) -> String;
}

/// A configured backend of either kind.
pub enum Backend {
    Mock(MockBackend),
    Http(HttpBackend),
}

impl Backend {
    pub fn from_config(cfg: &BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        match cfg.kind {
            BackendKind::Mock => {
                let mock = match &cfg.mock_rules {
                    Some(path) => MockBackend::from_file(path)?,
                    None => MockBackend::default(),
                };
                Ok(Backend::Mock(mock))
            }
            BackendKind::Http => Ok(Backend::Http(HttpBackend::new(cfg.clone())?)),
        }
    }
}

impl TextGenerator for Backend {
    fn generate(&self, prompt: &PromptText, params: &GenerationParams) -> Result<String, BackendError> {
        match self {
            Backend::Mock(m) => m.generate(prompt, params),
            Backend::Http(h) => h.generate(prompt, params),
        }
    }
}

impl Embedder for Backend {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        match self {
            Backend::Mock(m) => m.embed(texts),
            Backend::Http(h) => h.embed(texts),
        }
    }

    fn fingerprint(&self) -> String {
        match self {
            Backend::Mock(m) => m.fingerprint(),
            Backend::Http(h) => h.fingerprint(),
        }
    }
}

/// Memoises generations by a hash of the prompt text and parameters.
pub struct CachingGenerator<'a> {
    inner: &'a dyn TextGenerator,
    cache: Mutex<HashMap<[u8; 32], String>>,
    misses: Mutex<usize>,
}

impl<'a> CachingGenerator<'a> {
    pub fn new(inner: &'a dyn TextGenerator) -> Self {
        CachingGenerator {
            inner,
            cache: Mutex::new(HashMap::new()),
            misses: Mutex::new(0),
        }
    }

    /// Number of calls forwarded to the wrapped backend.
    pub fn misses(&self) -> usize {
        *self.misses.lock().unwrap()
    }

    fn key(prompt: &PromptText, params: &GenerationParams) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(params.model_name.as_bytes());
        h.update([0]);
        h.update(params.temperature.to_le_bytes());
        h.update(params.max_tokens.to_le_bytes());
        h.update(prompt.text.as_bytes());
        h.finalize().into()
    }
}

impl TextGenerator for CachingGenerator<'_> {
    fn generate(&self, prompt: &PromptText, params: &GenerationParams) -> Result<String, BackendError> {
        let key = Self::key(prompt, params);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let out = self.inner.generate(prompt, params)?;
        *self.misses.lock().unwrap() += 1;
        self.cache.lock().unwrap().insert(key, out.clone());
        Ok(out)
    }
}

/// Records every outgoing prompt, for auditing what leaves the process.
pub struct RecordingGenerator<'a> {
    inner: &'a dyn TextGenerator,
    prompts: Mutex<Vec<String>>,
}

impl<'a> RecordingGenerator<'a> {
    pub fn new(inner: &'a dyn TextGenerator) -> Self {
        RecordingGenerator {
            inner,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

impl TextGenerator for RecordingGenerator<'_> {
    fn generate(&self, prompt: &PromptText, params: &GenerationParams) -> Result<String, BackendError> {
        self.prompts.lock().unwrap().push(prompt.text.clone());
        self.inner.generate(prompt, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::PromptKind;

    #[test]
    fn config_validation() {
        let mut cfg = BackendConfig {
            kind: BackendKind::Http,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.base_url = Some("http://localhost:1".into());
        assert!(cfg.validate().is_ok());
        cfg.timeout_secs = 0.0;
        assert!(cfg.validate().is_err());
        assert!(GenerationParams {
            max_tokens: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn cache_forwards_once_per_prompt() {
        let mock = MockBackend::new(vec![MockRule::new("x", "y")]);
        let cache = CachingGenerator::new(&mock);
        let p = PromptText {
            text: "x marks".into(),
            kind: PromptKind::Summary,
        };
        let q = PromptText {
            text: "other".into(),
            kind: PromptKind::Summary,
        };
        let params = GenerationParams::default();
        assert_eq!(cache.generate(&p, &params).unwrap(), "y");
        assert_eq!(cache.generate(&p, &params).unwrap(), "y");
        assert_eq!(cache.generate(&q, &params).unwrap(), UNMATCHED);
        assert_eq!(cache.misses(), 2);
    }
}
