use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendConfig, BackendError, Embedder, GenerationParams, TextGenerator};
use crate::prompting::PromptText;

/// Counting semaphore bounding in-flight requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn new(n: usize) -> Self {
        Permits {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Done(Value),
    Retry(BackendError),
    Fail(BackendError),
}

/// Client for `/v1/chat/completions` and `/v1/embeddings`.
///
/// Timeouts, 429 and 5xx responses are retried with exponential backoff up
/// to `retry.max_attempts` total attempts; any other failure returns at once.
pub struct HttpBackend {
    cfg: BackendConfig,
    base_url: String,
    client: reqwest::blocking::Client,
    permits: Permits,
}

impl HttpBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        let base_url = cfg
            .base_url
            .clone()
            .unwrap_or_default()
            .trim_end_matches('/')
            .to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        let permits = Permits::new(cfg.max_concurrent);
        Ok(HttpBackend {
            cfg,
            base_url,
            client,
            permits,
        })
    }

    fn api_key(&self, request: &str) -> Result<String, BackendError> {
        match std::env::var(&self.cfg.api_key_env) {
            Ok(k) if !k.is_empty() => Ok(k),
            _ => Err(BackendError::AuthMissing {
                request: request.to_string(),
                var: self.cfg.api_key_env.clone(),
            }),
        }
    }

    fn attempt(&self, url: &str, request: &str, key: &str, body: &Value) -> Attempt {
        let _permit = self.permits.acquire();
        let resp = match self.client.post(url).bearer_auth(key).json(body).send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return Attempt::Retry(BackendError::Timeout {
                    request: request.to_string(),
                })
            }
            Err(e) => {
                return Attempt::Fail(BackendError::Transport {
                    request: request.to_string(),
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status();
        if !status.is_success() {
            let err = BackendError::HttpStatus {
                request: request.to_string(),
                code: status.as_u16(),
            };
            return if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            };
        }
        match resp.bytes() {
            Ok(bytes) => match serde_json::from_slice(&bytes) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fail(BackendError::MalformedResponse {
                    request: request.to_string(),
                    message: e.to_string(),
                }),
            },
            Err(e) if e.is_timeout() => Attempt::Retry(BackendError::Timeout {
                request: request.to_string(),
            }),
            Err(e) => Attempt::Fail(BackendError::Transport {
                request: request.to_string(),
                message: e.to_string(),
            }),
        }
    }

    fn post(&self, path: &str, body: &Value) -> Result<(String, Value), BackendError> {
        let url = format!("{}{}", self.base_url, path);
        let request = format!("POST {url}");
        let key = self.api_key(&request)?;
        let attempts = self.cfg.retry.max_attempts.max(1);
        let mut last = None;
        for n in 0..attempts {
            match self.attempt(&url, &request, &key, body) {
                Attempt::Done(v) => return Ok((request, v)),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => {
                    log::warn!("{e} (attempt {}/{attempts})", n + 1);
                    last = Some(e);
                    if n + 1 < attempts {
                        let delay = self.cfg.retry.backoff_base_ms.saturating_mul(1 << n.min(16));
                        thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

fn malformed(request: &str, message: &str) -> BackendError {
    BackendError::MalformedResponse {
        request: request.to_string(),
        message: message.to_string(),
    }
}

impl TextGenerator for HttpBackend {
    fn generate(&self, prompt: &PromptText, params: &GenerationParams) -> Result<String, BackendError> {
        params.validate()?;
        let body = json!({
            "model": params.model_name,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "messages": [{"role": "user", "content": prompt.text}],
        });
        let (request, v) = self.post("/v1/chat/completions", &body)?;
        v.get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| malformed(&request, "missing choices[0].message.content"))
    }
}

impl Embedder for HttpBackend {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = json!({"model": self.cfg.embedding_model, "input": texts});
        let (request, v) = self.post("/v1/embeddings", &body)?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(&request, "missing data array"))?;
        if data.len() != texts.len() {
            return Err(malformed(
                &request,
                &format!("{} embeddings for {} inputs", data.len(), texts.len()),
            ));
        }
        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let index = match item.get("index") {
                Some(i) => i
                    .as_u64()
                    .map(|i| i as usize)
                    .ok_or_else(|| malformed(&request, "non-integer index"))?,
                None => pos,
            };
            let emb = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed(&request, &format!("data[{pos}].embedding missing")))?
                .iter()
                .map(Value::as_f64)
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| malformed(&request, &format!("data[{pos}].embedding not numeric")))?;
            match out.get_mut(index) {
                Some(slot @ None) => *slot = Some(emb),
                _ => return Err(malformed(&request, &format!("bad or repeated index {index}"))),
            }
        }
        let out: Vec<Vec<f64>> = out.into_iter().map(Option::unwrap).collect();
        let dim = out[0].len();
        if dim == 0 || out.iter().any(|e| e.len() != dim) {
            return Err(malformed(&request, "embeddings have unequal or zero dimension"));
        }
        Ok(out)
    }

    fn fingerprint(&self) -> String {
        format!("http:{}:{}", self.base_url, self.cfg.embedding_model)
    }
}
