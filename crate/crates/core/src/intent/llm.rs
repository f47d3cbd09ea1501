use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone, Serialize, Deserialize, PartialEq)]
pub struct LlmConfig {
    pub api_base: String,
    #[serde(skip_serializing)]
    pub api_key: String,
    pub model: String,
    pub max_tokens_parse: u32,
    pub max_tokens_classify: u32,
    pub timeout_s: f64,
    pub enabled: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            api_base: "https://api.openai.com/v1".into(),
            api_key: String::new(),
            model: "gpt-4o-mini".into(),
            max_tokens_parse: 1024,
            max_tokens_classify: 64,
            timeout_s: 30.0,
            enabled: false,
        }
    }
}

impl fmt::Debug for LlmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmConfig")
            .field("api_base", &self.api_base)
            .field("api_key", &if self.api_key.is_empty() { "" } else { "<redacted>" })
            .field("model", &self.model)
            .field("max_tokens_parse", &self.max_tokens_parse)
            .field("max_tokens_classify", &self.max_tokens_classify)
            .field("timeout_s", &self.timeout_s)
            .field("enabled", &self.enabled)
            .finish()
    }
}

fn truthy(v: &str) -> bool {
    matches!(v.trim().to_ascii_lowercase().as_str(), "1" | "true" | "yes" | "on")
}

impl LlmConfig {
    /// Disabled config; every call takes the fallback path.
    pub fn offline() -> Self {
        LlmConfig::default()
    }

    /// Reads `LLM_API_BASE`, `LLM_API_KEY`, `LLM_MODEL` and `LLM_ENABLED`.
    /// Without `LLM_ENABLED` the client is enabled iff a base URL and key are set.
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Self {
        let mut cfg = LlmConfig::default();
        let base = get("LLM_API_BASE").filter(|s| !s.trim().is_empty());
        let key = get("LLM_API_KEY").filter(|s| !s.trim().is_empty());
        let have_endpoint = base.is_some() && key.is_some();
        if let Some(b) = base {
            cfg.api_base = b.trim().trim_end_matches('/').to_string();
        }
        if let Some(k) = key {
            cfg.api_key = k.trim().to_string();
        }
        if let Some(m) = get("LLM_MODEL").filter(|s| !s.trim().is_empty()) {
            cfg.model = m.trim().to_string();
        }
        cfg.enabled = match get("LLM_ENABLED") {
            Some(v) => truthy(&v),
            None => have_endpoint,
        };
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

/// One chat-completion round trip. Implementations must be shareable across sessions.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], max_tokens: u32) -> Result<String, String>;
}

/// OpenAI-compatible `POST {api_base}/chat/completions`.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    model: String,
}

impl HttpTransport {
    pub fn new(cfg: &LlmConfig) -> Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_s.max(0.001)))
            .build()
            .map_err(|e| e.to_string())?;
        Ok(HttpTransport {
            client,
            url: format!("{}/chat/completions", cfg.api_base.trim_end_matches('/')),
            api_key: cfg.api_key.clone(),
            model: cfg.model.clone(),
        })
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, messages: &[ChatMessage], max_tokens: u32) -> Result<String, String> {
        let body = json!({ "model": self.model, "messages": messages, "max_tokens": max_tokens });
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| format!("request failed: {e}"))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("endpoint returned {status}"));
        }
        let v: Value = resp.json().map_err(|e| format!("bad response body: {e}"))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| "response has no choices[0].message.content".into())
    }
}

/// Fails every call and counts how many were attempted.
#[derive(Debug, Default, Clone)]
pub struct SentinelTransport {
    calls: Arc<AtomicUsize>,
}

impl SentinelTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatTransport for SentinelTransport {
    fn complete(&self, _: &[ChatMessage], _: u32) -> Result<String, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err("sentinel transport: network access is not allowed here".into())
    }
}

/// Config plus transport. When `config.enabled` is false the transport is never touched.
#[derive(Clone)]
pub struct LlmClient {
    pub config: LlmConfig,
    transport: Option<Arc<dyn ChatTransport>>,
}

impl fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmClient").field("config", &self.config).field("transport", &self.transport.is_some()).finish()
    }
}

impl LlmClient {
    pub fn offline() -> Self {
        LlmClient { config: LlmConfig::offline(), transport: None }
    }

    /// HTTP transport when enabled. A transport that cannot be built leaves the
    /// client on the fallback paths.
    pub fn from_config(config: LlmConfig) -> Self {
        let transport = if config.enabled {
            HttpTransport::new(&config).ok().map(|t| Arc::new(t) as Arc<dyn ChatTransport>)
        } else {
            None
        };
        LlmClient { config, transport }
    }

    pub fn with_transport(config: LlmConfig, transport: Arc<dyn ChatTransport>) -> Self {
        LlmClient { config, transport: Some(transport) }
    }

    pub fn is_enabled(&self) -> bool {
        self.config.enabled
    }

    pub(crate) fn chat(&self, messages: &[ChatMessage], max_tokens: u32) -> Result<String, String> {
        if !self.config.enabled {
            return Err("LLM disabled".into());
        }
        match &self.transport {
            Some(t) => t.complete(messages, max_tokens),
            None => Err("no LLM transport available".into()),
        }
    }
}
