use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use url::Url;

use crate::error::{ProviderError, SyncError};
use crate::model::{format_instant, EventRecord};

use super::CalendarStore;

pub const DEFAULT_PROVIDER_TIMEOUT_MS: u64 = 10_000;
pub const IDEMPOTENCY_HEADER: &str = "Idempotency-Key";

fn default_timeout() -> u64 {
    DEFAULT_PROVIDER_TIMEOUT_MS
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub base_url: String,
    pub calendar_id: String,
    #[serde(default)]
    pub auth_token: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("base_url", &self.base_url)
            .field("calendar_id", &self.calendar_id)
            .field("auth_token", &"<redacted>")
            .field("timeout_ms", &self.timeout_ms)
            .finish()
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<Url, ProviderError> {
        let url = Url::parse(&self.base_url)
            .map_err(|e| ProviderError::Config(format!("base_url {:?}: {e}", self.base_url)))?;
        if url.cannot_be_a_base() {
            return Err(ProviderError::Config(format!(
                "base_url {:?} is not absolute",
                self.base_url
            )));
        }
        if self.calendar_id.is_empty() {
            return Err(ProviderError::Config("calendar_id is empty".into()));
        }
        Ok(url)
    }

    pub fn events_url(&self) -> String {
        format!(
            "{}/calendars/{}/events",
            self.base_url.trim_end_matches('/'),
            url::form_urlencoded::byte_serialize(self.calendar_id.as_bytes()).collect::<String>()
        )
    }
}

/// Provider request body for a local record.
pub fn event_body(record: &EventRecord) -> Value {
    let attendees: Vec<Value> = record
        .attendee
        .iter()
        .map(|name| json!({"displayName": name}))
        .collect();
    json!({
        "summary": record.title,
        "description": record.description,
        "start": {"dateTime": format_instant(&record.start)},
        "end": {"dateTime": format_instant(&record.end)},
        "attendees": attendees,
    })
}

/// Event-insert client for a remote calendar.
#[derive(Debug, Clone)]
pub struct ProviderClient {
    config: ProviderConfig,
    client: reqwest::Client,
}

impl ProviderClient {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| ProviderError::Network(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// Inserts the event and returns the provider's id for it. The local id
    /// is sent as the idempotency key, so retries never duplicate.
    pub async fn insert_event(&self, record: &EventRecord) -> Result<String, ProviderError> {
        let timeout_ms = self.config.timeout_ms;
        let map_err = |e: reqwest::Error| {
            if e.is_timeout() {
                ProviderError::Timeout(timeout_ms)
            } else {
                ProviderError::Network(e.to_string())
            }
        };
        let resp = self
            .client
            .post(self.config.events_url())
            .bearer_auth(&self.config.auth_token)
            .header(IDEMPOTENCY_HEADER, &record.id)
            .json(&event_body(record))
            .send()
            .await
            .map_err(map_err)?;
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(ProviderError::Auth(status));
        }
        if !resp.status().is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(ProviderError::Status { status, body });
        }
        let body: Value = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout(timeout_ms)
            } else {
                ProviderError::Malformed(e.to_string())
            }
        })?;
        body.get("id")
            .and_then(Value::as_str)
            .filter(|id| !id.is_empty())
            .map(String::from)
            .ok_or_else(|| ProviderError::Malformed("response has no event id".into()))
    }
}

/// Pushes a locally committed record to the provider and stores the
/// returned id. On failure the local record is left as it was.
pub async fn sync_external(
    store: &CalendarStore,
    record_id: &str,
    client: &ProviderClient,
) -> Result<String, SyncError> {
    let record = store
        .get(record_id)
        .ok_or_else(|| crate::error::StoreError::NotFound(record_id.to_string()))?;
    if record.external_id.is_some() {
        return Err(crate::error::StoreError::AlreadySynced(record_id.to_string()).into());
    }
    let external_id = client.insert_event(&record).await?;
    store.set_external_id(record_id, &external_id)?;
    Ok(external_id)
}
