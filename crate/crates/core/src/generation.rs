//! Client for an OpenAI-compatible chat-completions endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{PatientCase, UrgencyLabel};
use crate::draft::{GeneratorConfig, GEN_KEY_ENV};
use crate::triage::{AdherenceSummary, EstimatorError, TrendFindings, UrgencyEstimator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(config: &GeneratorConfig, messages: Vec<ChatMessage>) -> Self {
        Self {
            model: config.model_id.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            messages,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GenerationError {
    #[error("generation service unreachable: {0}")]
    Unreachable(String),
    #[error("generation service timed out")]
    Timeout,
    #[error("generation service returned status {0}")]
    Status(u16),
    #[error("generation service returned an unusable response: {0}")]
    BadResponse(String),
}

/// A chat-completion backend. Implementations must be callable from several
/// threads at once.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, GenerationError>;
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Blocking HTTP client. The endpoint is the full chat-completions URL.
pub struct HttpChatClient {
    url: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(url: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: url.into(),
            key,
            agent,
        }
    }

    /// Client for `config.endpoint_url`, with the bearer key taken from
    /// `ADHERENCE_GEN_KEY` when set.
    pub fn from_config(config: &GeneratorConfig) -> Self {
        let key = std::env::var(GEN_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(
            config.endpoint_url.clone(),
            key,
            Duration::from_secs(config.timeout_seconds),
        )
    }
}

impl ChatBackend for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, GenerationError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = req.send_json(request).map_err(map_ureq_error)?;
        let body: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| GenerationError::BadResponse(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GenerationError::BadResponse("no choices in response".into()))
    }
}

fn map_ureq_error(e: ureq::Error) -> GenerationError {
    match e {
        ureq::Error::StatusCode(code) => GenerationError::Status(code),
        ureq::Error::Timeout(_) => GenerationError::Timeout,
        other => GenerationError::Unreachable(other.to_string()),
    }
}

/// Urgency estimate from the chat backend: the model answers with one label.
pub struct ChatEstimator<B> {
    backend: B,
    config: GeneratorConfig,
}

impl<B: ChatBackend> ChatEstimator<B> {
    pub fn new(backend: B, config: GeneratorConfig) -> Self {
        Self { backend, config }
    }
}

const ESTIMATE_PROMPT: &str = "You estimate the follow-up urgency of a chronic-disease patient from \
home monitoring data. Answer with exactly one word: stable, attention or urgent.";

/// The first line must be one label, optionally followed by punctuation.
pub fn parse_urgency_answer(answer: &str) -> Option<UrgencyLabel> {
    let first = answer.trim().lines().next()?.trim();
    let word = first.trim_matches(|c: char| !c.is_ascii_alphabetic());
    word.to_ascii_lowercase().parse().ok()
}

impl<B: ChatBackend> UrgencyEstimator for ChatEstimator<B> {
    fn estimate(
        &self,
        case: &PatientCase,
        adherence: &AdherenceSummary,
        trends: &TrendFindings,
    ) -> Result<UrgencyLabel, EstimatorError> {
        let data = serde_json::json!({
            "conditions": case.conditions,
            "adherence": adherence,
            "trends": trends,
        });
        let request = ChatRequest::new(
            &self.config,
            vec![ChatMessage::system(ESTIMATE_PROMPT), ChatMessage::user(data.to_string())],
        );
        let answer = self
            .backend
            .complete(&request)
            .map_err(|e| EstimatorError::Unavailable(e.to_string()))?;
        parse_urgency_answer(&answer).ok_or(EstimatorError::InvalidResponse(answer))
    }
}
