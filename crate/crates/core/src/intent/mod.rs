//! Transcript to validated [`SchedulingIntent`], through a chat-completion
//! backend with a rule-based fallback.

mod backend;
mod fallback;
mod prompt;
mod repair;

pub use backend::{ChatEndpoint, HttpChatBackend, LlmBackend, LlmRequest, MockLlm};
pub use fallback::{extract_fallback, extract_fallback_with};
pub use prompt::{build_prompt, INTENT_JSON_SCHEMA};
pub use repair::{balanced_objects, extract_json_object, parse_response, strip_code_fences};

use serde::Serialize;
use serde_json::{json, Value};
use tracing::{debug, warn};

use crate::error::ExtractError;
use crate::model::{ReferenceClock, SchedulingIntent};
use crate::trigger::KeywordSet;

pub const DEFAULT_MAX_TOKENS: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Llm,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionResult {
    pub intent: SchedulingIntent,
    pub provenance: Provenance,
    /// The model's last verbatim reply. Always present for [`Provenance::Llm`].
    pub raw_response: Option<String>,
    /// Why the model path was abandoned, when it was.
    pub llm_error: Option<String>,
}

impl ExtractionResult {
    pub fn to_json_value(&self) -> Value {
        let mut v = json!({
            "intent": self.intent.to_json_value(),
            "provenance": self.provenance,
            "raw_response": self.raw_response,
        });
        if let Some(err) = &self.llm_error {
            v["llm_error"] = Value::from(err.as_str());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractOptions {
    pub max_tokens: u32,
    pub keywords: KeywordSet,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            keywords: KeywordSet::default(),
        }
    }
}

/// Model extraction with one retry on invalid output, falling back to the
/// rule-based grammar on backend errors or a second invalid reply.
pub async fn extract(
    transcript: &str,
    clock: &ReferenceClock,
    backend: &dyn LlmBackend,
    options: &ExtractOptions,
) -> Result<ExtractionResult, ExtractError> {
    let request = LlmRequest::new(
        build_prompt(transcript, clock),
        backend.model_name(),
        options.max_tokens,
    );

    let mut last_raw = None;
    let mut llm_error = String::new();
    for attempt in 1..=2 {
        match backend.complete(&request).await {
            Ok(raw) => match parse_response(&raw) {
                Ok(intent) => {
                    return Ok(ExtractionResult {
                        intent,
                        provenance: Provenance::Llm,
                        raw_response: Some(raw),
                        llm_error: None,
                    })
                }
                Err(e) => {
                    debug!(attempt, error = %e, "model reply rejected");
                    llm_error = e.to_string();
                    last_raw = Some(raw);
                }
            },
            Err(e) => {
                warn!(error = %e, "model backend failed, using fallback parser");
                llm_error = e.to_string();
                break;
            }
        }
    }

    match extract_fallback_with(transcript, &options.keywords) {
        Ok(intent) => Ok(ExtractionResult {
            intent,
            provenance: Provenance::Fallback,
            raw_response: last_raw,
            llm_error: Some(llm_error),
        }),
        Err(fallback) => Err(ExtractError::Unresolvable {
            llm: llm_error,
            fallback,
        }),
    }
}
