//! Chat-completion adapter contract and its implementations.
//!
//! The wire contract is JSON over HTTP: request
//! `{model, messages: [{role, content}], temperature}`, response parsed
//! from the first text block. Scripted adapters back the same trait for
//! offline runs and CI.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::AdapterConfig;
use crate::hash::sha256_hex;

/// Environment variable holding the default endpoint base URL.
pub const ADAPTER_URL_ENV: &str = "STATCLAIM_ADAPTER_URL";
/// Environment variable holding the bearer token, if the endpoint needs one.
pub const ADAPTER_TOKEN_ENV: &str = "STATCLAIM_ADAPTER_TOKEN";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".to_string(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn single(model: &str, temperature: f64, prompt: impl Into<String>) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![ChatMessage::user(prompt)],
            temperature,
        }
    }

    fn cache_key(&self) -> String {
        sha256_hex(
            self.messages
                .iter()
                .flat_map(|m| [m.role.as_bytes(), m.content.as_bytes()])
                .chain([self.model.as_bytes()]),
        )
    }
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter unavailable: {0}")]
    Unavailable(String),
    #[error("adapter returned an empty generation")]
    EmptyGeneration,
}

/// Capability contract for chat completion. Implementations must be
/// deterministic under temperature 0 within a session.
pub trait ChatAdapter: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, AdapterError>;
    fn id(&self) -> String;
}

/// HTTP adapter speaking the JSON wire contract. Responses at
/// temperature 0 are cached per session.
pub struct HttpChatAdapter {
    client: reqwest::blocking::Client,
    base_url: String,
    token: Option<String>,
    config: AdapterConfig,
    cache: Mutex<HashMap<String, String>>,
}

impl HttpChatAdapter {
    pub fn new(config: AdapterConfig) -> Result<Self, AdapterError> {
        let base_url = config
            .base_url
            .clone()
            .or_else(|| std::env::var(ADAPTER_URL_ENV).ok())
            .ok_or_else(|| {
                AdapterError::Unavailable(format!(
                    "no adapter URL configured ({ADAPTER_URL_ENV} unset)"
                ))
            })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        Ok(Self {
            client,
            base_url,
            token: std::env::var(ADAPTER_TOKEN_ENV).ok(),
            config,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn post_once(&self, request: &ChatRequest) -> Result<String, AdapterError> {
        let mut builder = self.client.post(&self.base_url).json(request);
        if let Some(token) = &self.token {
            builder = builder.bearer_auth(token);
        }
        let response = builder
            .send()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(AdapterError::Unavailable(format!(
                "endpoint returned {}",
                response.status()
            )));
        }
        let body: serde_json::Value = response
            .json()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        first_text_block(&body).ok_or(AdapterError::EmptyGeneration)
    }
}

impl ChatAdapter for HttpChatAdapter {
    fn complete(&self, request: &ChatRequest) -> Result<String, AdapterError> {
        let cacheable = request.temperature == 0.0;
        let key = request.cache_key();
        if cacheable {
            if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
                return Ok(hit.clone());
            }
        }
        let mut last_err = AdapterError::Unavailable("no attempts made".to_string());
        for _ in 0..=self.config.max_retries {
            match self.post_once(request) {
                Ok(text) => {
                    if text.trim().is_empty() {
                        return Err(AdapterError::EmptyGeneration);
                    }
                    if cacheable {
                        self.cache
                            .lock()
                            .expect("cache lock")
                            .insert(key, text.clone());
                    }
                    return Ok(text);
                }
                Err(e) => last_err = e,
            }
        }
        Err(last_err)
    }

    fn id(&self) -> String {
        format!("http:{}:{}", self.base_url, self.config.model)
    }
}

/// Extracts the first text block from common response shapes:
/// `choices[0].message.content`, `choices[0].text`, or a top-level
/// `content` string.
fn first_text_block(body: &serde_json::Value) -> Option<String> {
    let candidates = [
        body.pointer("/choices/0/message/content"),
        body.pointer("/choices/0/text"),
        body.pointer("/content/0/text"),
        body.get("content"),
    ];
    candidates
        .into_iter()
        .flatten()
        .find_map(|v| v.as_str().map(str::to_string))
}

/// Scripted adapter for offline runs: needle-matched responses first,
/// then a FIFO queue, then an optional default.
pub struct ScriptedAdapter {
    name: String,
    needles: Vec<(String, String)>,
    queue: Mutex<VecDeque<Result<String, String>>>,
    default: Option<String>,
}

impl ScriptedAdapter {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            needles: Vec::new(),
            queue: Mutex::new(VecDeque::new()),
            default: None,
        }
    }

    /// Responds with `response` whenever the last message contains `needle`.
    pub fn on(mut self, needle: &str, response: &str) -> Self {
        self.needles.push((needle.to_string(), response.to_string()));
        self
    }

    /// Queues one response consumed in order when no needle matches.
    pub fn push(self, response: &str) -> Self {
        self.queue
            .lock()
            .expect("queue lock")
            .push_back(Ok(response.to_string()));
        self
    }

    /// Queues one failure.
    pub fn push_error(self, message: &str) -> Self {
        self.queue
            .lock()
            .expect("queue lock")
            .push_back(Err(message.to_string()));
        self
    }

    pub fn with_default(mut self, response: &str) -> Self {
        self.default = Some(response.to_string());
        self
    }
}

impl ChatAdapter for ScriptedAdapter {
    fn complete(&self, request: &ChatRequest) -> Result<String, AdapterError> {
        let prompt = request
            .messages
            .last()
            .map(|m| m.content.as_str())
            .unwrap_or("");
        for (needle, response) in &self.needles {
            if prompt.contains(needle.as_str()) {
                return Ok(response.clone());
            }
        }
        if let Some(next) = self.queue.lock().expect("queue lock").pop_front() {
            return next.map_err(AdapterError::Unavailable);
        }
        match &self.default {
            Some(response) => Ok(response.clone()),
            None => Err(AdapterError::Unavailable(format!(
                "scripted adapter {} has no response for prompt",
                self.name
            ))),
        }
    }

    fn id(&self) -> String {
        format!("scripted:{}", self.name)
    }
}

/// Closure-backed adapter for tests and pipeline wiring.
pub struct FnAdapter<F> {
    name: String,
    func: F,
}

impl<F> FnAdapter<F>
where
    F: Fn(&ChatRequest) -> Result<String, AdapterError> + Send + Sync,
{
    pub fn new(name: &str, func: F) -> Self {
        Self {
            name: name.to_string(),
            func,
        }
    }
}

impl<F> ChatAdapter for FnAdapter<F>
where
    F: Fn(&ChatRequest) -> Result<String, AdapterError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, AdapterError> {
        (self.func)(request)
    }

    fn id(&self) -> String {
        format!("fn:{}", self.name)
    }
}

/// A versioned prompt template with `{{name}}` placeholders.
#[derive(Debug, Clone, Copy)]
pub struct PromptTemplate {
    pub name: &'static str,
    pub text: &'static str,
}

impl PromptTemplate {
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = self.text.to_string();
        for (key, value) in vars {
            out = out.replace(&format!("{{{{{key}}}}}"), value);
        }
        out
    }

    /// Content hash, recorded in claim provenance.
    pub fn hash(&self) -> String {
        let mut h = sha256_hex([self.text.as_bytes()]);
        h.truncate(16);
        h
    }
}

pub const GENERATE_CLAIM_PROMPT: PromptTemplate = PromptTemplate {
    name: "generate_claim",
    text: include_str!("../prompts/generate_claim.txt"),
};
pub const JUDGE_CLAIM_PROMPT: PromptTemplate = PromptTemplate {
    name: "judge_claim",
    text: include_str!("../prompts/judge_claim.txt"),
};
pub const DECOMPOSE_PROMPT: PromptTemplate = PromptTemplate {
    name: "decompose",
    text: include_str!("../prompts/decompose.txt"),
};
pub const GENERATE_SQL_PROMPT: PromptTemplate = PromptTemplate {
    name: "generate_sql",
    text: include_str!("../prompts/generate_sql.txt"),
};
pub const VERDICT_SUBCLAIM_PROMPT: PromptTemplate = PromptTemplate {
    name: "verdict_subclaim",
    text: include_str!("../prompts/verdict_subclaim.txt"),
};
pub const SYNTHESIZE_PROMPT: PromptTemplate = PromptTemplate {
    name: "synthesize",
    text: include_str!("../prompts/synthesize.txt"),
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_adapter_matches_needles_then_queue() {
        let adapter = ScriptedAdapter::new("t")
            .on("magic", "needle hit")
            .push("first")
            .push("second");
        let ask = |prompt: &str| {
            adapter
                .complete(&ChatRequest::single("m", 0.0, prompt))
                .unwrap()
        };
        assert_eq!(ask("has magic inside"), "needle hit");
        assert_eq!(ask("plain"), "first");
        assert_eq!(ask("plain"), "second");
        assert!(adapter
            .complete(&ChatRequest::single("m", 0.0, "plain"))
            .is_err());
    }

    #[test]
    fn prompt_render_replaces_placeholders() {
        let rendered = DECOMPOSE_PROMPT.render(&[("claim", "X grew in 2020.")]);
        assert!(rendered.contains("Claim: X grew in 2020."));
        assert!(!rendered.contains("{{claim}}"));
    }

    #[test]
    fn first_text_block_supports_common_shapes() {
        let openai: serde_json::Value = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "hello"}}]
        });
        assert_eq!(first_text_block(&openai).as_deref(), Some("hello"));
        let completions: serde_json::Value =
            serde_json::json!({"choices": [{"text": "legacy"}]});
        assert_eq!(first_text_block(&completions).as_deref(), Some("legacy"));
        let blocks: serde_json::Value =
            serde_json::json!({"content": [{"type": "text", "text": "block"}]});
        assert_eq!(first_text_block(&blocks).as_deref(), Some("block"));
        let flat: serde_json::Value = serde_json::json!({"content": "flat"});
        assert_eq!(first_text_block(&flat).as_deref(), Some("flat"));
    }
}
