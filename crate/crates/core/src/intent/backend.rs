//! Chat-completion backends. The hosted model is configuration, not code:
//! anything speaking the OpenAI-style `/chat/completions` shape works.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::BackendError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub model_name: String,
    pub max_tokens: u32,
    pub temperature: f32,
}

impl LlmRequest {
    /// Requests are always sent at temperature 0.
    pub fn new(prompt: String, model_name: impl Into<String>, max_tokens: u32) -> Self {
        Self {
            prompt,
            model_name: model_name.into(),
            max_tokens: max_tokens.max(1),
            temperature: 0.0,
        }
    }
}

#[async_trait]
pub trait LlmBackend: Send + Sync {
    fn model_name(&self) -> &str;

    /// Sends one prompt and returns the model's verbatim text reply.
    async fn complete(&self, request: &LlmRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEndpoint {
    pub base_url: String,
    pub api_key: String,
    pub model_name: String,
    pub timeout_ms: u64,
}

pub struct HttpChatBackend {
    endpoint: ChatEndpoint,
    client: reqwest::Client,
}

impl HttpChatBackend {
    pub fn new(endpoint: ChatEndpoint) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(endpoint.timeout_ms))
            .build()
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        Ok(Self { endpoint, client })
    }

    fn url(&self) -> String {
        format!(
            "{}/chat/completions",
            self.endpoint.base_url.trim_end_matches('/')
        )
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[async_trait]
impl LlmBackend for HttpChatBackend {
    fn model_name(&self) -> &str {
        &self.endpoint.model_name
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let resp = self
            .client
            .post(self.url())
            .bearer_auth(&self.endpoint.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout(self.endpoint.timeout_ms)
                } else {
                    BackendError::Unreachable(e.to_string())
                }
            })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: ChatResponse = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout(self.endpoint.timeout_ms)
            } else {
                BackendError::Malformed(e.to_string())
            }
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Malformed("no choices in response".into()))
    }
}

/// Offline backend for tests and demos.
pub enum MockLlm {
    /// Every call fails as if the endpoint were down.
    Unreachable,
    /// Replies are served in order; once exhausted, calls fail.
    Scripted(Mutex<VecDeque<Result<String, BackendError>>>),
}

impl MockLlm {
    pub fn scripted<I>(replies: I) -> Self
    where
        I: IntoIterator<Item = Result<String, BackendError>>,
    {
        MockLlm::Scripted(Mutex::new(replies.into_iter().collect()))
    }

    pub fn replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::scripted(replies.into_iter().map(|r| Ok(r.into())))
    }
}

#[async_trait]
impl LlmBackend for MockLlm {
    fn model_name(&self) -> &str {
        "mock"
    }

    async fn complete(&self, _request: &LlmRequest) -> Result<String, BackendError> {
        match self {
            MockLlm::Unreachable => {
                Err(BackendError::Unreachable("mock backend is offline".into()))
            }
            MockLlm::Scripted(queue) => queue
                .lock()
                .expect("mock queue poisoned")
                .pop_front()
                .unwrap_or_else(|| Err(BackendError::Unreachable("mock script exhausted".into()))),
        }
    }
}
