//! Chat-completion client with a record/replay store.
//!
//! Every request is keyed by a hash of its full content. Live clients write
//! each exchange to the store; replay clients only read it and fail loudly
//! on a miss.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::dataset::write_atomic;
use crate::hashing::content_hash;

pub const API_KEY_ENV: &str = "VF_LLM_KEY";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("replay miss for prompt hash {hash}")]
    ReplayMiss { hash: String },
    #[error("replay store {path}: {message}")]
    Store { path: PathBuf, message: String },
    #[error("LLM endpoint failed after {attempts} attempts: {last}")]
    Exhausted { attempts: usize, last: String },
    #[error("LLM endpoint rejected request (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed LLM response: {0}")]
    Malformed(String),
    #[error("missing API key (set {API_KEY_ENV})")]
    MissingKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model_tag: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl LlmRequest {
    /// Greedy decoding request.
    pub fn greedy(model_tag: impl Into<String>, prompt: impl Into<String>) -> Self {
        LlmRequest {
            model_tag: model_tag.into(),
            prompt: prompt.into(),
            temperature: 0.0,
            max_tokens: 4096,
        }
    }

    /// Key under which the exchange is stored.
    pub fn prompt_hash(&self) -> String {
        let temperature = self.temperature.to_bits().to_string();
        let max_tokens = self.max_tokens.to_string();
        content_hash([
            self.model_tag.as_str(),
            self.prompt.as_str(),
            temperature.as_str(),
            max_tokens.as_str(),
        ])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub finish_reason: String,
    #[serde(default)]
    pub usage: Usage,
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError>;
}

pub fn llm_call(request: &LlmRequest, client: &dyn LlmClient) -> Result<LlmResponse, LlmError> {
    client.complete(request)
}

/// One stored exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub request: LlmRequest,
    pub response: LlmResponse,
}

/// Directory of `<prompt-hash>.json` records. Append-only: an existing
/// record is never overwritten.
#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn get(&self, hash: &str) -> Result<Option<ReplayRecord>, LlmError> {
        let path = self.path_for(hash);
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| LlmError::Store {
                path,
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LlmError::Store {
                path,
                message: e.to_string(),
            }),
        }
    }

    pub fn put(&self, record: &ReplayRecord) -> Result<(), LlmError> {
        let path = self.path_for(&record.request.prompt_hash());
        if path.exists() {
            return Ok(());
        }
        let mut bytes = serde_json::to_vec_pretty(record).expect("record serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes).map_err(|e| LlmError::Store {
            path: path.clone(),
            message: e.to_string(),
        })
    }
}

/// Serves responses from a [`ReplayStore`] only.
#[derive(Debug, Clone)]
pub struct ReplayClient {
    store: ReplayStore,
}

impl ReplayClient {
    pub fn new(store: ReplayStore) -> Self {
        ReplayClient { store }
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let hash = request.prompt_hash();
        match self.store.get(&hash)? {
            Some(record) => Ok(record.response),
            None => Err(LlmError::ReplayMiss { hash }),
        }
    }
}

/// Minimal HTTP seam so the retry logic can be tested without a network.
pub trait HttpTransport: Send + Sync {
    /// Returns `(status, body)`; `Err` for transport-level failures.
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &serde_json::Value) -> Result<(u16, String), String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        UreqTransport {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &serde_json::Value) -> Result<(u16, String), String> {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

/// Outcome of one HTTP attempt, kept for auditing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptLog {
    pub prompt_hash: String,
    pub attempt: usize,
    pub outcome: String,
}

/// Calls a chat-completion endpoint, retrying transport errors, 429 and
/// 5xx with exponential backoff, and records successes to the store.
pub struct LiveClient {
    endpoint: String,
    api_key: String,
    transport: Box<dyn HttpTransport>,
    store: Option<ReplayStore>,
    pub max_attempts: usize,
    pub backoff: Duration,
    attempts: Mutex<Vec<AttemptLog>>,
}

impl LiveClient {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, transport: Box<dyn HttpTransport>, store: Option<ReplayStore>) -> Self {
        LiveClient {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            transport,
            store,
            max_attempts: 4,
            backoff: Duration::from_millis(500),
            attempts: Mutex::new(Vec::new()),
        }
    }

    /// Reads the key from `VF_LLM_KEY` and uses the ureq transport.
    pub fn from_env(endpoint: impl Into<String>, store: Option<ReplayStore>) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| LlmError::MissingKey)?;
        Ok(LiveClient::new(endpoint, key, Box::new(UreqTransport::new(Duration::from_secs(300))), store))
    }

    pub fn attempt_log(&self) -> Vec<AttemptLog> {
        self.attempts.lock().expect("attempt log lock").clone()
    }

    fn log(&self, hash: &str, attempt: usize, outcome: String) {
        self.attempts.lock().expect("attempt log lock").push(AttemptLog {
            prompt_hash: hash.to_string(),
            attempt,
            outcome,
        });
    }
}

fn parse_completion(body: &str) -> Result<LlmResponse, LlmError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(e.to_string()))?;
    let choice = &v["choices"][0];
    let text = choice["message"]["content"]
        .as_str()
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))?;
    Ok(LlmResponse {
        text: text.to_string(),
        finish_reason: choice["finish_reason"].as_str().unwrap_or("unknown").to_string(),
        usage: Usage {
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        },
    })
}

impl LlmClient for LiveClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let hash = request.prompt_hash();
        let body = json!({
            "model": request.model_tag,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let headers = vec![
            ("Authorization".to_string(), format!("Bearer {}", self.api_key)),
            ("Content-Type".to_string(), "application/json".to_string()),
        ];
        let mut last = String::new();
        for attempt in 0..self.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.backoff * (1 << (attempt - 1).min(16)));
            }
            match self.transport.post_json(&self.endpoint, &headers, &body) {
                Ok((200..=299, text)) => {
                    self.log(&hash, attempt, "ok".into());
                    let response = parse_completion(&text)?;
                    if let Some(store) = &self.store {
                        store.put(&ReplayRecord {
                            request: request.clone(),
                            response: response.clone(),
                        })?;
                    }
                    return Ok(response);
                }
                Ok((status, text)) if status == 429 || status >= 500 => {
                    self.log(&hash, attempt, format!("http {status}"));
                    last = format!("HTTP {status}: {text}");
                }
                Ok((status, text)) => {
                    self.log(&hash, attempt, format!("http {status}"));
                    return Err(LlmError::Rejected { status, body: text });
                }
                Err(e) => {
                    self.log(&hash, attempt, format!("transport: {e}"));
                    last = e;
                }
            }
        }
        Err(LlmError::Exhausted {
            attempts: self.max_attempts.max(1),
            last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scripted {
        replies: Mutex<Vec<Result<(u16, String), String>>>,
    }

    impl HttpTransport for Scripted {
        fn post_json(&self, _: &str, _: &[(String, String)], _: &serde_json::Value) -> Result<(u16, String), String> {
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn ok_body(text: &str) -> String {
        json!({"choices": [{"message": {"content": text}, "finish_reason": "stop"}],
               "usage": {"prompt_tokens": 3, "completion_tokens": 4}})
        .to_string()
    }

    fn client(replies: Vec<Result<(u16, String), String>>, store: Option<ReplayStore>) -> LiveClient {
        let mut c = LiveClient::new("http://test", "k", Box::new(Scripted { replies: Mutex::new(replies) }), store);
        c.backoff = Duration::ZERO;
        c
    }

    #[test]
    fn retries_server_error_then_records() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::new(dir.path());
        let c = client(vec![Ok((500, "boom".into())), Ok((200, ok_body("hello")))], Some(store.clone()));
        let req = LlmRequest::greedy("m", "p");
        let resp = c.complete(&req).unwrap();
        assert_eq!(resp.text, "hello");
        assert_eq!(resp.usage.completion_tokens, 4);
        let log = c.attempt_log();
        assert_eq!(log.len(), 2);
        assert_eq!(log[0].outcome, "http 500");
        assert_eq!(log[1].outcome, "ok");
        let replayed = ReplayClient::new(store).complete(&req).unwrap();
        assert_eq!(replayed, resp);
    }

    #[test]
    fn gives_up_after_bounded_attempts() {
        let c = client(vec![Err("down".into()), Err("down".into()), Err("down".into()), Err("down".into())], None);
        let err = c.complete(&LlmRequest::greedy("m", "p")).unwrap_err();
        assert!(matches!(err, LlmError::Exhausted { attempts: 4, .. }));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let c = client(vec![Ok((401, "no".into()))], None);
        assert!(matches!(
            c.complete(&LlmRequest::greedy("m", "p")),
            Err(LlmError::Rejected { status: 401, .. })
        ));
        assert_eq!(c.attempt_log().len(), 1);
    }

    #[test]
    fn replay_miss_names_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let req = LlmRequest::greedy("m", "unseen");
        let err = ReplayClient::new(ReplayStore::new(dir.path())).complete(&req).unwrap_err();
        assert!(err.to_string().contains(&req.prompt_hash()));
    }

    #[test]
    fn store_is_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::new(dir.path());
        let request = LlmRequest::greedy("m", "p");
        let first = LlmResponse {
            text: "first".into(),
            finish_reason: "stop".into(),
            usage: Usage::default(),
        };
        store.put(&ReplayRecord { request: request.clone(), response: first.clone() }).unwrap();
        let second = LlmResponse { text: "second".into(), ..first.clone() };
        store.put(&ReplayRecord { request: request.clone(), response: second }).unwrap();
        assert_eq!(store.get(&request.prompt_hash()).unwrap().unwrap().response, first);
    }

    #[test]
    fn hash_depends_on_every_field() {
        let base = LlmRequest::greedy("m", "p");
        let mut warmer = base.clone();
        warmer.temperature = 0.5;
        let mut other_model = base.clone();
        other_model.model_tag = "n".into();
        assert_ne!(base.prompt_hash(), warmer.prompt_hash());
        assert_ne!(base.prompt_hash(), other_model.prompt_hash());
    }
}
