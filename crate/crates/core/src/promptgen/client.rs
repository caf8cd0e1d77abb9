use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompts::triplet_candidates;
use super::ClientError;
use crate::corpus::ComponentTriplet;

/// Environment variable that replaces the configured endpoint.
pub const ENDPOINT_ENV: &str = "LAIDA_LLM_ENDPOINT";

/// A text-completion backend.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;
}

/// Where completions come from: an HTTP URL, `mock` for the built-in
/// synthetic responder, or `mock:<transcript.jsonl>` for scripted replies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmClientSpec {
    pub endpoint: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
}

impl Default for LlmClientSpec {
    fn default() -> Self {
        Self {
            endpoint: "mock".into(),
            timeout_secs: 60.0,
            max_retries: 2,
        }
    }
}

impl LlmClientSpec {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ClientError::InvalidSpec(format!("timeout must be positive, got {}", self.timeout_secs)));
        }
        if self.endpoint.trim().is_empty() {
            return Err(ClientError::InvalidSpec("empty endpoint".into()));
        }
        Ok(())
    }

    /// Applies [`ENDPOINT_ENV`] when it is set and nonempty.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(e) = std::env::var(ENDPOINT_ENV) {
            if !e.trim().is_empty() {
                self.endpoint = e;
            }
        }
        self
    }

    /// True when no network access is involved.
    pub fn is_mock(&self) -> bool {
        self.endpoint == "mock" || self.endpoint.starts_with("mock:")
    }

    /// Resolves `mock:<relative path>` against `base`.
    pub fn resolve_relative(mut self, base: &Path) -> Self {
        if let Some(p) = self.endpoint.strip_prefix("mock:") {
            let p = Path::new(p);
            if p.is_relative() {
                self.endpoint = format!("mock:{}", base.join(p).display());
            }
        }
        self
    }

    pub fn connect(&self) -> Result<Box<dyn LlmClient>, ClientError> {
        self.validate()?;
        if self.endpoint == "mock" {
            return Ok(Box::new(SyntheticClient));
        }
        if let Some(path) = self.endpoint.strip_prefix("mock:") {
            return Ok(Box::new(MockClient::from_file(Path::new(path))?));
        }
        if self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://") {
            return Ok(Box::new(HttpClient::new(&self.endpoint, Duration::from_secs_f64(self.timeout_secs))?));
        }
        Err(ClientError::InvalidSpec(format!("unsupported endpoint {:?}", self.endpoint)))
    }
}

#[derive(Debug, Deserialize)]
struct TranscriptEntry {
    #[serde(rename = "match")]
    pattern: String,
    #[serde(default)]
    responses: Vec<String>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Debug)]
struct Script {
    entry: TranscriptEntry,
    calls: AtomicUsize,
}

/// Scripted client. Each transcript line is
/// `{"match": <substring>, "responses": [...]}` or
/// `{"match": <substring>, "error": <message>}`; the first entry whose
/// substring occurs in the prompt answers. Successive calls walk through
/// `responses` and repeat the last one once exhausted.
#[derive(Debug)]
pub struct MockClient {
    scripts: Vec<Script>,
    source: Option<PathBuf>,
}

impl MockClient {
    pub fn from_jsonl(text: &str) -> Result<Self, ClientError> {
        let mut scripts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line).map_err(|e| ClientError::Transcript {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if entry.responses.is_empty() && entry.error.is_none() {
                return Err(ClientError::Transcript {
                    line: i + 1,
                    reason: "entry has neither responses nor error".into(),
                });
            }
            scripts.push(Script {
                entry,
                calls: AtomicUsize::new(0),
            });
        }
        Ok(Self { scripts, source: None })
    }

    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClientError::InvalidSpec(format!("cannot read transcript {}: {e}", path.display())))?;
        let mut client = Self::from_jsonl(&text)?;
        client.source = Some(path.to_path_buf());
        Ok(client)
    }

    /// Calls answered so far for the entry at `index`.
    pub fn calls(&self, index: usize) -> usize {
        self.scripts[index].calls.load(Ordering::SeqCst)
    }
}

impl LlmClient for MockClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let script = self
            .scripts
            .iter()
            .find(|s| prompt.contains(&s.entry.pattern))
            .ok_or(ClientError::NoScript)?;
        let n = script.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(e) = &script.entry.error {
            return Err(ClientError::Transport(e.clone()));
        }
        let r = &script.entry.responses;
        Ok(r[n.min(r.len() - 1)].clone())
    }
}

/// Offline responder: reads the first bracketed triplet in the prompt
/// (the gold) and answers with three rearrangements of it.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticClient;

impl LlmClient for SyntheticClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let gold = super::prompts::first_triplet(prompt, "[T|V|G]")
            .ok_or_else(|| ClientError::BadResponse("synthetic client found no triplet in the prompt".into()))?;
        let lines: Vec<String> = triplet_candidates(&gold)
            .into_iter()
            .take(3)
            .map(|t: ComponentTriplet| t.bracketed())
            .collect();
        Ok(lines.join("\n"))
    }
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct HttpResponse {
    text: String,
}

/// POSTs `{"prompt": ...}` and expects `{"text": ...}` back.
#[derive(Debug)]
pub struct HttpClient {
    endpoint: String,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            http,
        })
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let resp = self
            .http
            .post(&self.endpoint)
            .json(&HttpRequest { prompt })
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ClientError::Status(status.as_u16()));
        }
        let body: HttpResponse = resp.json().map_err(|e| ClientError::BadResponse(e.to_string()))?;
        Ok(body.text)
    }
}
