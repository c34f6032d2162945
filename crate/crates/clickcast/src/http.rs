//! External services over HTTP: chat LLM, sentiment, formatter, embedder.
//!
//! Calls are sequential. Each client shares one [`Transport`], retries
//! transient failures with exponential backoff and waits at least
//! `min_interval` between requests to the same client.

use std::cell::Cell;
use std::fs;
use std::path::PathBuf;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use clickcast_core::embedding::{EmbedderIdentity, TextEmbedder, TextEmbedding};
use clickcast_core::reward::{
    LexiconScorer, ResponseFormatter, Sentiment, SentimentResult, SentimentScorer,
};
use clickcast_core::summarize::LlmClient;

use crate::error::{Error, Result};
use crate::meta::sha256_hex;

pub const ENV_LLM_URL: &str = "CLICKCAST_LLM_URL";
pub const ENV_LLM_MODEL: &str = "CLICKCAST_LLM_MODEL";
pub const ENV_LLM_API_KEY: &str = "CLICKCAST_LLM_API_KEY";
pub const ENV_SENTIMENT_URL: &str = "CLICKCAST_SENTIMENT_URL";
pub const ENV_FORMATTER_URL: &str = "CLICKCAST_FORMATTER_URL";
pub const ENV_EMBED_URL: &str = "CLICKCAST_EMBED_URL";
pub const ENV_EMBED_MODEL: &str = "CLICKCAST_EMBED_MODEL";

#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    /// Worth retrying: connection problems, 429 and 5xx.
    Transient(String),
    Permanent(String),
}

/// Sends one JSON request and returns the JSON reply.
pub trait Transport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &Value,
    ) -> Result<Value, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &Value,
    ) -> Result<Value, TransportError> {
        let mut req = self.agent.post(url);
        if let Some(k) = api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        match req.send_json(body) {
            Ok(mut resp) => resp
                .body_mut()
                .read_json()
                .map_err(|e| TransportError::Permanent(e.to_string())),
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                Err(TransportError::Transient(format!("HTTP {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => {
                Err(TransportError::Permanent(format!("HTTP {code}")))
            }
            Err(e) => Err(TransportError::Transient(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    /// Minimum spacing between two requests.
    pub min_interval: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            min_interval: Duration::from_millis(100),
        }
    }
}

/// A transport plus retry and rate-limit state for one endpoint.
pub struct Endpoint {
    pub url: String,
    pub api_key: Option<String>,
    transport: Rc<dyn Transport>,
    policy: RetryPolicy,
    last_call: Cell<Option<Instant>>,
    calls: Cell<usize>,
}

impl Endpoint {
    pub fn new(
        url: impl Into<String>,
        api_key: Option<String>,
        transport: Rc<dyn Transport>,
        policy: RetryPolicy,
    ) -> Self {
        Self {
            url: url.into(),
            api_key,
            transport,
            policy,
            last_call: Cell::new(None),
            calls: Cell::new(0),
        }
    }

    /// Requests sent so far, retries included.
    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn post(&self, body: &Value) -> Result<Value> {
        let mut attempt = 0;
        loop {
            if let Some(last) = self.last_call.get() {
                let since = last.elapsed();
                if since < self.policy.min_interval {
                    std::thread::sleep(self.policy.min_interval - since);
                }
            }
            self.last_call.set(Some(Instant::now()));
            self.calls.set(self.calls.get() + 1);
            attempt += 1;
            match self
                .transport
                .post_json(&self.url, self.api_key.as_deref(), body)
            {
                Ok(v) => return Ok(v),
                Err(TransportError::Transient(msg)) if attempt < self.policy.max_attempts => {
                    let delay = self.policy.base_delay * 2u32.pow(attempt - 1);
                    log::warn!("{}: {msg}; retrying in {delay:?}", self.url);
                    std::thread::sleep(delay);
                }
                Err(TransportError::Transient(msg) | TransportError::Permanent(msg)) => {
                    return Err(Error::Http {
                        url: self.url.clone(),
                        msg,
                    });
                }
            }
        }
    }
}

fn env(name: &'static str) -> Result<String> {
    std::env::var(name).map_err(|_| Error::MissingEnv(name))
}

fn env_opt(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// OpenAI-style chat completions client with an on-disk response cache
/// keyed by model and prompt hash.
pub struct ChatClient {
    endpoint: Endpoint,
    pub model: String,
    pub version: String,
    pub system_prompt: Option<String>,
    cache_dir: Option<PathBuf>,
    cache_hits: Cell<usize>,
}

impl ChatClient {
    pub fn new(endpoint: Endpoint, model: impl Into<String>) -> Self {
        Self {
            endpoint,
            model: model.into(),
            version: "unversioned".into(),
            system_prompt: None,
            cache_dir: None,
            cache_hits: Cell::new(0),
        }
    }

    /// Reads `CLICKCAST_LLM_URL`, `CLICKCAST_LLM_MODEL` and the optional
    /// `CLICKCAST_LLM_API_KEY`. `url` overrides the URL variable.
    pub fn from_env(url: Option<&str>, transport: Rc<dyn Transport>) -> Result<Self> {
        let url = match url {
            Some(u) => u.to_string(),
            None => env(ENV_LLM_URL)?,
        };
        let model = env(ENV_LLM_MODEL)?;
        Ok(Self::new(
            Endpoint::new(
                url,
                env_opt(ENV_LLM_API_KEY),
                transport,
                RetryPolicy::default(),
            ),
            model,
        ))
    }

    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.get()
    }

    fn cache_path(&self, prompt: &str) -> Option<PathBuf> {
        let key = sha256_hex(
            format!(
                "{}\0{}\0{}",
                self.model,
                self.system_prompt.as_deref().unwrap_or(""),
                prompt
            )
            .as_bytes(),
        );
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{key}.txt")))
    }

    pub fn chat(&self, prompt: &str) -> Result<String> {
        let cache = self.cache_path(prompt);
        if let Some(text) = cache.as_ref().and_then(|p| fs::read_to_string(p).ok()) {
            self.cache_hits.set(self.cache_hits.get() + 1);
            return Ok(text);
        }
        let mut messages = Vec::new();
        if let Some(s) = &self.system_prompt {
            messages.push(json!({"role": "system", "content": s}));
        }
        messages.push(json!({"role": "user", "content": prompt}));
        let body = json!({"model": self.model, "messages": messages, "temperature": 0});
        let reply = self.endpoint.post(&body)?;
        let text = reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Http {
                url: self.endpoint.url.clone(),
                msg: "reply has no choices[0].message.content".into(),
            })?
            .to_string();
        if let Some(p) = cache {
            if let Err(e) =
                crate::jsonl::write_atomic(&p, |w| std::io::Write::write_all(w, text.as_bytes()))
            {
                log::warn!("could not cache chat reply: {e}");
            }
        }
        Ok(text)
    }
}

impl LlmClient for ChatClient {
    fn identity(&self) -> String {
        format!("{}@{}", self.model, self.version)
    }

    fn complete(&self, prompt: &str) -> clickcast_core::Result<String> {
        self.chat(prompt)
            .map_err(|e| clickcast_core::Error::External(e.to_string()))
    }
}

pub const FORMATTER_INSTRUCTION: &str =
    "Rewrite the response below into exactly this structure and nothing else: \
<Reasoning> one sentence </Reasoning><Prediction> Increase or Decrease </Prediction>. \
Keep the meaning of the original response.";

/// Reformatting through a chat model. Only the raw response is sent.
pub struct ChatFormatter {
    client: ChatClient,
}

impl ChatFormatter {
    pub fn new(mut client: ChatClient) -> Self {
        client.system_prompt = Some(FORMATTER_INSTRUCTION.to_string());
        Self { client }
    }

    /// `CLICKCAST_FORMATTER_URL` with the LLM model and key variables.
    pub fn from_env(transport: Rc<dyn Transport>) -> Result<Self> {
        let url = env(ENV_FORMATTER_URL)?;
        Ok(Self::new(ChatClient::from_env(Some(&url), transport)?))
    }
}

impl ResponseFormatter for ChatFormatter {
    fn reformat(&self, raw: &str) -> clickcast_core::Result<String> {
        self.client
            .chat(raw)
            .map_err(|e| clickcast_core::Error::External(e.to_string()))
    }
}

/// Sentiment classifier behind `POST {"text": ...}` answering
/// `{"label": "POSITIVE"|"NEGATIVE"|"NEUTRAL", "confidence": x}`.
/// Any failure falls back to the lexicon scorer for that text.
pub struct HttpSentiment {
    endpoint: Endpoint,
    fallback: LexiconScorer,
    fallbacks: Cell<usize>,
}

impl HttpSentiment {
    pub fn new(endpoint: Endpoint, fallback: LexiconScorer) -> Self {
        Self {
            endpoint,
            fallback,
            fallbacks: Cell::new(0),
        }
    }

    pub fn from_env(transport: Rc<dyn Transport>, fallback: LexiconScorer) -> Result<Self> {
        let url = env(ENV_SENTIMENT_URL)?;
        Ok(Self::new(
            Endpoint::new(
                url,
                env_opt(ENV_LLM_API_KEY),
                transport,
                RetryPolicy::default(),
            ),
            fallback,
        ))
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks.get()
    }

    fn remote(&self, text: &str) -> Result<SentimentResult> {
        let v = self.endpoint.post(&json!({ "text": text }))?;
        let label: Sentiment = serde_json::from_value(
            v.get("label").cloned().unwrap_or(Value::Null),
        )
        .map_err(|e| Error::Http {
            url: self.endpoint.url.clone(),
            msg: format!("bad label: {e}"),
        })?;
        let confidence = v
            .get("confidence")
            .and_then(Value::as_f64)
            .filter(|c| (0.0..=1.0).contains(c))
            .ok_or_else(|| Error::Http {
                url: self.endpoint.url.clone(),
                msg: "confidence missing or outside [0, 1]".into(),
            })?;
        Ok(SentimentResult { label, confidence })
    }
}

impl SentimentScorer for HttpSentiment {
    fn score(&self, text: &str) -> SentimentResult {
        match self.remote(text) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("sentiment service failed, using lexicon: {e}");
                self.fallbacks.set(self.fallbacks.get() + 1);
                self.fallback.score(text)
            }
        }
    }
}

/// OpenAI-style embeddings endpoint (`data[0].embedding`).
pub struct HttpEmbedder {
    endpoint: Endpoint,
    pub model: String,
    pub dim: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: Endpoint, model: impl Into<String>, dim: usize) -> Self {
        Self {
            endpoint,
            model: model.into(),
            dim,
        }
    }

    pub fn from_env(transport: Rc<dyn Transport>, dim: usize) -> Result<Self> {
        let url = env(ENV_EMBED_URL)?;
        let model = env(ENV_EMBED_MODEL)?;
        Ok(Self::new(
            Endpoint::new(
                url,
                env_opt(ENV_LLM_API_KEY),
                transport,
                RetryPolicy::default(),
            ),
            model,
            dim,
        ))
    }
}

impl TextEmbedder for HttpEmbedder {
    fn identity(&self) -> EmbedderIdentity {
        EmbedderIdentity {
            name: format!("http:{}", self.model),
            version: "1".into(),
            seed: None,
            dim: self.dim,
        }
    }

    fn embed(&self, text: &str) -> clickcast_core::Result<TextEmbedding> {
        let ext = clickcast_core::Error::External;
        let v = self
            .endpoint
            .post(&json!({"model": self.model, "input": text}))
            .map_err(|e| ext(e.to_string()))?;
        let arr = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ext("reply has no data[0].embedding".into()))?;
        let vector: Vec<f32> = arr
            .iter()
            .filter_map(Value::as_f64)
            .map(|x| x as f32)
            .collect();
        if vector.len() != self.dim || vector.len() != arr.len() {
            return Err(ext(format!(
                "expected {} numbers, got {}",
                self.dim,
                arr.len()
            )));
        }
        Ok(TextEmbedding {
            vector,
            source_text_hash: clickcast_core::embedding::text_hash(text),
        })
    }
}
