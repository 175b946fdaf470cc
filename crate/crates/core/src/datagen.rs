//! AI counterparts for human documents via summarize-then-elaborate prompting.
//!
//! Each counterpart takes two independent chat calls: the first summarizes
//! the human text, the second (a fresh conversation) expands the summary
//! alone. Providers are pluggable; [`StubProvider`] works offline and
//! [`HttpProvider`] talks to any chat-completions style endpoint.

use std::io::{BufWriter, Write};
use std::path::Path;
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::corpus::{clean_text, deduplicate, Corpus, CorpusError, Label, LabeledDocument};

pub const SUMMARIZE_TEMPLATE: &str = "please summarize this one into 3 lines keeping the context as it is";
pub const ELABORATE_TEMPLATE: &str =
    "Now elaborate on this topic with around 600 to 750 words keeping the context in mind";
/// `{words}` is replaced by the human text's word count.
pub const SHORT_ELABORATE_TEMPLATE: &str =
    "Now elaborate on this topic with around {words} words keeping the context in mind";

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("http status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("request failed: {0}")]
    Transport(String),
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
}

impl ProviderError {
    fn retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("document {source_id}: {source}")]
    Provider {
        source_id: String,
        #[source]
        source: ProviderError,
    },
    #[error("document {source_id}: provider returned an empty {stage}")]
    EmptyResponse { source_id: String, stage: &'static str },
    #[error("document {0} is empty")]
    EmptyInput(String),
    #[error("document {0} is not labeled human")]
    NotHuman(String),
    #[error("all {0} generations failed")]
    AllFailed(usize),
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DatagenError {
    /// Source document id for per-document failures.
    pub fn source_id(&self) -> Option<&str> {
        match self {
            DatagenError::Provider { source_id, .. } | DatagenError::EmptyResponse { source_id, .. } => Some(source_id),
            DatagenError::EmptyInput(id) | DatagenError::NotHuman(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// A chat model. Every call carries its full message list; providers keep
/// no conversation state.
pub trait LlmProvider: Send + Sync {
    fn name(&self) -> String;

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptProtocol {
    pub summarize_template: String,
    pub elaborate_template: String,
    /// Ask for output about as long as the input instead.
    pub short_mode: bool,
    pub short_elaborate_template: String,
}

impl Default for PromptProtocol {
    fn default() -> Self {
        PromptProtocol {
            summarize_template: SUMMARIZE_TEMPLATE.into(),
            elaborate_template: ELABORATE_TEMPLATE.into(),
            short_mode: false,
            short_elaborate_template: SHORT_ELABORATE_TEMPLATE.into(),
        }
    }
}

impl PromptProtocol {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let empty = |s: &str| s.trim().is_empty();
        if empty(&self.summarize_template) || empty(&self.elaborate_template) || empty(&self.short_elaborate_template) {
            return Err(DatagenError::InvalidProtocol("templates must be non-empty".into()));
        }
        Ok(())
    }

    pub fn summarize_prompt(&self, human_text: &str) -> String {
        format!("{}\n\n{}", self.summarize_template, human_text)
    }

    /// Only the summary and the human text's word count reach the second call.
    pub fn elaborate_prompt(&self, summary: &str, human_words: usize) -> String {
        let instruction = if self.short_mode {
            self.short_elaborate_template
                .replace("{words}", &human_words.to_string())
        } else {
            self.elaborate_template.clone()
        };
        format!("{instruction}\n\n{summary}")
    }
}

/// Offline provider. Replies `"[SUM] <first 10 words of the payload>"` to
/// prompts whose instruction mentions summarizing and `"[ELAB] <payload>"`
/// otherwise, each followed by `" (stub <seed>)"`. The payload is whatever
/// follows the first blank line of the last message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubProvider {
    pub seed: u64,
}

impl StubProvider {
    pub fn new(seed: u64) -> Self {
        StubProvider { seed }
    }
}

impl LlmProvider for StubProvider {
    fn name(&self) -> String {
        format!("stub-{}", self.seed)
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let content = messages.last().map_or("", |m| m.content.as_str());
        let (instruction, payload) = content.split_once("\n\n").unwrap_or(("", content));
        let reply = if instruction.to_lowercase().contains("summar") {
            let head: Vec<&str> = payload.split_whitespace().take(10).collect();
            format!("[SUM] {}", head.join(" "))
        } else {
            format!("[ELAB] {payload}")
        };
        Ok(format!("{reply} (stub {})", self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token; empty for
    /// endpoints without authentication.
    pub api_key_env_var: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Extra request fields (temperature and the like), passed through as is.
    pub parameters: Map<String, Value>,
}

impl Default for LlmProviderConfig {
    fn default() -> Self {
        LlmProviderConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-mini".into(),
            api_key_env_var: "OPENAI_API_KEY".into(),
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            parameters: Map::new(),
        }
    }
}

impl LlmProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ProviderError::InvalidConfig(format!(
                "timeout must be > 0, got {}",
                self.timeout_secs
            )));
        }
        if self.endpoint_url.is_empty() {
            return Err(ProviderError::InvalidConfig("endpoint_url is empty".into()));
        }
        Ok(())
    }
}

pub struct HttpProvider {
    config: LlmProviderConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: LlmProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let api_key = if config.api_key_env_var.is_empty() {
            None
        } else {
            Some(
                std::env::var(&config.api_key_env_var)
                    .map_err(|_| ProviderError::MissingApiKey(config.api_key_env_var.clone()))?,
            )
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpProvider { config, api_key, agent })
    }

    pub fn config(&self) -> &LlmProviderConfig {
        &self.config
    }

    pub fn request_body(&self, messages: &[ChatMessage]) -> Value {
        let mut body = self.config.parameters.clone();
        body.insert("model".into(), json!(self.config.model_name));
        body.insert("messages".into(), json!(messages));
        Value::Object(body)
    }

    fn attempt(&self, body: &Value) -> Result<String, ProviderError> {
        let mut req = self.agent.post(&self.config.endpoint_url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body: text });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::BadResponse("missing choices[0].message.content".into()))
    }
}

impl LlmProvider for HttpProvider {
    fn name(&self) -> String {
        self.config.model_name.clone()
    }

    /// Retries transport failures, 429 and 5xx with exponential backoff, at
    /// most `max_retries` times.
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let body = self.request_body(messages);
        let mut retry = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if e.retryable() && retry < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << retry.min(16));
                    log::warn!("provider call failed ({e}); retry {} in {delay} ms", retry + 1);
                    thread::sleep(Duration::from_millis(delay));
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub source_id: String,
    pub summary: String,
    pub elaboration: String,
    pub provider: String,
    pub timestamp: DateTime<Utc>,
}

/// Runs the two-call protocol for one human text.
pub fn generate_counterpart(
    client: &dyn LlmProvider,
    source_id: &str,
    human_text: &str,
    protocol: &PromptProtocol,
) -> Result<GenerationRecord, DatagenError> {
    let words = human_text.split_whitespace().count();
    if words == 0 {
        return Err(DatagenError::EmptyInput(source_id.into()));
    }
    let call = |prompt: String, stage: &'static str| -> Result<String, DatagenError> {
        let reply = client
            .complete(&[ChatMessage::user(prompt)])
            .map_err(|source| DatagenError::Provider {
                source_id: source_id.into(),
                source,
            })?;
        if reply.trim().is_empty() {
            return Err(DatagenError::EmptyResponse {
                source_id: source_id.into(),
                stage,
            });
        }
        Ok(reply)
    };
    let summary = call(protocol.summarize_prompt(human_text), "summary")?;
    let elaboration = call(protocol.elaborate_prompt(&summary, words), "elaboration")?;
    Ok(GenerationRecord {
        source_id: source_id.into(),
        summary,
        elaboration,
        provider: client.name(),
        timestamp: Utc::now(),
    })
}

#[derive(Debug)]
pub struct PairedDataset {
    /// Each surviving human document followed by its counterpart.
    pub corpus: Corpus,
    pub records: Vec<GenerationRecord>,
    /// Per-document failures that were skipped.
    pub failures: Vec<DatagenError>,
}

/// Generates one labeled-AI counterpart per human document, running up to
/// `parallelism` documents at once. Results keep source order.
pub fn build_paired_dataset(
    humans: &Corpus,
    client: &dyn LlmProvider,
    protocol: &PromptProtocol,
    parallelism: usize,
) -> Result<PairedDataset, DatagenError> {
    protocol.validate()?;
    if humans.is_empty() {
        return Err(CorpusError::Empty.into());
    }
    if let Some(d) = humans.documents.iter().find(|d| d.label != Label::Human) {
        return Err(DatagenError::NotHuman(d.id.clone()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<GenerationRecord, DatagenError>> = pool.install(|| {
        humans
            .documents
            .par_iter()
            .map(|d| generate_counterpart(client, &d.id, &clean_text(&d.text), protocol))
            .collect()
    });

    let mut documents = Vec::with_capacity(humans.len() * 2);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (human, result) in humans.documents.iter().zip(results) {
        match result {
            Ok(record) => {
                let text = clean_text(&record.elaboration);
                documents.push(LabeledDocument {
                    text: clean_text(&human.text),
                    ..human.clone()
                });
                documents.push(LabeledDocument {
                    id: format!("{}-ai", human.id),
                    text,
                    label: Label::Ai,
                    domain_tag: human.domain_tag.clone(),
                });
                records.push(record);
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", human.id);
                failures.push(e);
            }
        }
    }
    if records.is_empty() {
        return Err(DatagenError::AllFailed(humans.len()));
    }
    let corpus = deduplicate(&Corpus::new(humans.source_name.clone(), documents));
    Ok(PairedDataset {
        corpus,
        records,
        failures,
    })
}

pub fn write_generation_log(records: &[GenerationRecord], path: &Path) -> Result<(), DatagenError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
