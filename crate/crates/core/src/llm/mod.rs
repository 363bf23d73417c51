//! Chat-completions transport.
//!
//! Speaks the common `POST {endpoint}/chat/completions` shape (a `messages`
//! array of role/content pairs). Transient failures (network errors, 408,
//! 429, 5xx) are retried with capped exponential backoff.

pub mod mock;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::prompts::PromptBundle;

pub const API_KEY_ENV: &str = "WHOSPY_API_KEY";

/// Bearer token. Never serialized and redacted from `Debug`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        ApiKey(key.into())
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()).map(ApiKey)
    }

    fn expose(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Base URL, e.g. `https://api.example.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f32,
    pub max_tokens: u32,
    /// Per-attempt HTTP timeout.
    pub timeout_s: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Ceiling on simultaneous requests through one client.
    pub max_concurrency: usize,
    #[serde(skip)]
    pub api_key: Option<ApiKey>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://127.0.0.1:8080/v1".into(),
            model: "glm-4-9b-flash".into(),
            temperature: 0.3,
            max_tokens: 10_000,
            timeout_s: 120,
            max_retries: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            max_concurrency: 8,
            api_key: None,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidConfig("max_tokens must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(LlmError::InvalidConfig("max_concurrency must be positive".into()));
        }
        reqwest::Url::parse(&self.endpoint)
            .map_err(|e| LlmError::InvalidConfig(format!("endpoint `{}`: {e}", self.endpoint)))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

/// One completed request/response pair, as stored in transcripts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub messages: Vec<ChatMessage>,
    pub response: String,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
    pub attempts: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid LLM config: {0}")]
    InvalidConfig(String),
    #[error("network failure after {attempts} attempts: {detail}")]
    Network { attempts: u32, detail: String },
    #[error("provider returned HTTP {status} after {attempts} attempts: {body}")]
    Status { status: u16, body: String, attempts: u32 },
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("could not decode provider response: {0}")]
    Decode(String),
}

#[derive(Serialize)]
struct ChatRequestBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponseBody {
    #[serde(default)]
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Delay before retry number `attempt` (1-based): `base * 2^(attempt-1)`,
/// capped at `max`. Nondecreasing in `attempt`.
pub fn backoff_delay(base_ms: u64, max_ms: u64, attempt: u32) -> Duration {
    let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
    Duration::from_millis(base_ms.saturating_mul(factor).min(max_ms))
}

fn retryable_status(status: u16) -> bool {
    matches!(status, 408 | 429) || (500..600).contains(&status)
}

#[derive(Debug, Clone)]
pub struct LlmClient {
    http: reqwest::Client,
    config: LlmConfig,
    url: String,
    limiter: Arc<Semaphore>,
}

impl LlmClient {
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s.max(1)))
            .build()
            .map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
        let url = format!("{}/chat/completions", config.endpoint.trim_end_matches('/'));
        let limiter = Arc::new(Semaphore::new(config.max_concurrency));
        Ok(LlmClient {
            http,
            config,
            url,
            limiter,
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Sends `system`, the replayed per-seat context, then the bundle's user text.
    pub async fn complete(&self, bundle: &PromptBundle, context: &[ChatMessage]) -> Result<ChatExchange, LlmError> {
        let mut messages = Vec::with_capacity(context.len() + 2);
        messages.push(ChatMessage::new(Role::System, bundle.system.clone()));
        messages.extend(context.iter().filter(|m| m.role != Role::System).cloned());
        messages.push(ChatMessage::new(Role::User, bundle.user.clone()));
        self.chat(messages).await
    }

    pub async fn chat(&self, messages: Vec<ChatMessage>) -> Result<ChatExchange, LlmError> {
        let _permit = self.limiter.acquire().await.expect("semaphore never closed");
        let body = ChatRequestBody {
            model: &self.config.model,
            messages: &messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let started = Instant::now();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let mut req = self.http.post(&self.url).json(&body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key.expose());
            }
            let failure = match req.send().await {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    if resp.status().is_success() {
                        let text = resp.text().await.map_err(|e| LlmError::Decode(e.to_string()))?;
                        let parsed: ChatResponseBody =
                            serde_json::from_str(&text).map_err(|e| LlmError::Decode(e.to_string()))?;
                        let content = parsed
                            .choices
                            .into_iter()
                            .next()
                            .and_then(|c| c.message.content)
                            .unwrap_or_default();
                        if content.trim().is_empty() {
                            return Err(LlmError::EmptyCompletion);
                        }
                        tracing::debug!(attempt, "chat completion succeeded");
                        return Ok(ChatExchange {
                            messages,
                            response: content,
                            usage: parsed.usage,
                            latency_ms: started.elapsed().as_millis() as u64,
                            attempts: attempt,
                        });
                    }
                    let body = resp.text().await.unwrap_or_default();
                    if !retryable_status(status) {
                        return Err(LlmError::Status {
                            status,
                            body,
                            attempts: attempt,
                        });
                    }
                    LlmError::Status {
                        status,
                        body,
                        attempts: attempt,
                    }
                }
                Err(e) => LlmError::Network {
                    attempts: attempt,
                    detail: e.to_string(),
                },
            };
            if attempt > self.config.max_retries {
                return Err(failure);
            }
            let delay = backoff_delay(self.config.backoff_base_ms, self.config.backoff_max_ms, attempt);
            tracing::warn!(attempt, ?delay, error = %failure, "retrying chat completion");
            tokio::time::sleep(delay).await;
        }
    }
}
