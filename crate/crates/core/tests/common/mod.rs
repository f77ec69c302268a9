#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::Value;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Runs the command-line entry point in-process and returns its exit code.
pub fn cli<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv: Vec<String> = std::iter::once("summact".to_string())
        .chain(args.iter().map(|a| a.as_ref().to_string()))
        .collect();
    summact::pipeline::cli::run(argv)
}

pub fn p(path: &Path) -> String {
    path.to_str().expect("utf-8 path").to_string()
}

#[derive(Debug, Clone)]
pub struct Seen {
    pub path: String,
    pub authorization: Option<String>,
    pub body: Value,
}

type Handler = dyn Fn(usize, &Seen) -> (u16, String) + Send + Sync;

/// One-request-per-connection HTTP server on 127.0.0.1. `handler` gets the
/// zero-based request number and the parsed request.
pub struct StubServer {
    pub base_url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(usize, &Seen) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        let handler: Arc<Handler> = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    continue;
                }
                let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
                let mut len = 0;
                let mut authorization = None;
                loop {
                    let mut h = String::new();
                    if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                        break;
                    }
                    let (name, value) = h.split_once(':').unwrap_or((&h, ""));
                    let value = value.trim().to_string();
                    match name.to_ascii_lowercase().as_str() {
                        "content-length" => len = value.parse().unwrap_or(0),
                        "authorization" => authorization = Some(value),
                        _ => {}
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req = Seen {
                    path,
                    authorization,
                    body: serde_json::from_slice(&body).unwrap_or(Value::Null),
                };
                let n = {
                    let mut log = log.lock().unwrap();
                    log.push(req.clone());
                    log.len() - 1
                };
                let (code, text) = handler(n, &req);
                let resp = format!(
                    "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        StubServer { base_url, seen }
    }

    pub fn requests(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

fn is_str(v: &Value, key: &str) -> bool {
    v.get(key).is_some_and(Value::is_string)
}

/// Shape of an OpenAI-style chat completion request.
pub fn check_chat_body(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("body is not an object")?;
    for key in obj.keys() {
        if !["model", "temperature", "max_tokens", "messages"].contains(&key.as_str()) {
            return Err(format!("unexpected field {key}"));
        }
    }
    if !is_str(v, "model") {
        return Err("model must be a string".into());
    }
    if !v
        .get("temperature")
        .is_some_and(|t| t.as_f64().is_some_and(|t| t >= 0.0))
    {
        return Err("temperature must be a non-negative number".into());
    }
    if !v.get("max_tokens").is_some_and(|t| t.as_u64().is_some_and(|t| t >= 1)) {
        return Err("max_tokens must be a positive integer".into());
    }
    let msgs = v
        .get("messages")
        .and_then(Value::as_array)
        .ok_or("messages must be an array")?;
    if msgs.is_empty() {
        return Err("messages is empty".into());
    }
    for m in msgs {
        if !is_str(m, "role") || !is_str(m, "content") {
            return Err("message needs string role and content".into());
        }
    }
    Ok(())
}

/// Shape of an OpenAI-style embeddings request.
pub fn check_embeddings_body(v: &Value) -> Result<(), String> {
    if !is_str(v, "model") {
        return Err("model must be a string".into());
    }
    let input = v
        .get("input")
        .and_then(Value::as_array)
        .ok_or("input must be an array")?;
    if input.is_empty() || !input.iter().all(Value::is_string) {
        return Err("input must be a non-empty array of strings".into());
    }
    Ok(())
}

pub fn chat_reply(content: &str) -> String {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

/// Embeddings for `inputs`, listed in reverse with explicit indices; input
/// `i` maps to the vector `[i + 1, 0.5]`.
pub fn reversed_embeddings(inputs: &[Value]) -> String {
    let data: Vec<Value> = (0..inputs.len())
        .rev()
        .map(|i| serde_json::json!({"index": i, "embedding": [i as f64 + 1.0, 0.5]}))
        .collect();
    serde_json::json!({"data": data}).to_string()
}
