use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, FixedOffset, Utc};
use serde_json::{json, Value};
use tokio::sync::{broadcast, oneshot};
use tracing::{info, warn};
use uuid::Uuid;

use crate::calendar::{sync_external, CalendarStore, ProviderClient};
use crate::error::{ConfigError, GatewayError};
use crate::intent::{extract, ChatEndpoint, ExtractOptions, HttpChatBackend, LlmBackend, MockLlm};
use crate::model::{format_instant, EventRecord, ReferenceClock, ResolvedEvent, Zone};
use crate::temporal::{resolve_event, WindowDefaults};
use crate::trigger::{detect, KeywordSet};

use super::config::{GatewayConfig, LlmMode, SttMode};
use super::stage::{Stage, StageEvent};
use super::stt::{transcribe, AudioClip, CloudStt, MockStt, SttBackend};

const EVENT_CHANNEL_CAPACITY: usize = 1024;

/// What a session starts from.
#[derive(Debug, Clone)]
pub enum UtteranceInput {
    Text(String),
    Audio(AudioClip),
}

/// Operator decision on a pending event; the session answers on `reply`.
enum Decision {
    Confirm(oneshot::Sender<StageEvent>),
    Cancel(oneshot::Sender<StageEvent>),
}

struct PendingSlot {
    expires_at: DateTime<Utc>,
    decision: oneshot::Sender<Decision>,
}

/// Injectable backends; [`Backends::from_config`] builds the configured ones.
pub struct Backends {
    pub llm: Arc<dyn LlmBackend>,
    pub stt: Arc<dyn SttBackend>,
    pub provider: Option<ProviderClient>,
}

impl Backends {
    pub fn from_config(config: &GatewayConfig) -> Result<Self, ConfigError> {
        let llm: Arc<dyn LlmBackend> = match config.llm.mode {
            LlmMode::Mock => Arc::new(MockLlm::Unreachable),
            LlmMode::Live => Arc::new(
                HttpChatBackend::new(ChatEndpoint {
                    base_url: config.llm.base_url.clone(),
                    api_key: config.llm.api_key.clone(),
                    model_name: config.llm.model_name.clone(),
                    timeout_ms: config.llm.timeout_ms,
                })
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
        };
        let stt: Arc<dyn SttBackend> = match config.stt.mode {
            SttMode::Mock => Arc::new(MockStt {
                fixture_dir: config.stt.fixture_dir.clone(),
            }),
            SttMode::Cloud => Arc::new(
                CloudStt::new(
                    &config.stt.endpoint,
                    &config.stt.api_key,
                    &config.stt.language_code,
                    config.stt.timeout_ms,
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
        };
        let provider = config
            .provider
            .clone()
            .map(ProviderClient::new)
            .transpose()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Self { llm, stt, provider })
    }
}

/// The end-to-end pipeline. One instance is shared by every session.
pub struct Gateway {
    config: GatewayConfig,
    zone: Zone,
    keywords: KeywordSet,
    defaults: WindowDefaults,
    extract_options: ExtractOptions,
    store: Arc<CalendarStore>,
    backends: Backends,
    events: broadcast::Sender<StageEvent>,
    pending: Mutex<HashMap<String, PendingSlot>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

/// Emits the events of one session with gapless sequence numbers.
struct Session<'g> {
    gateway: &'g Gateway,
    id: String,
    seq: u64,
}

impl Session<'_> {
    fn emit(&mut self, stage: Stage, payload: Value) -> StageEvent {
        self.seq += 1;
        let event = StageEvent {
            session_id: self.id.clone(),
            seq: self.seq,
            stage,
            payload,
            at: Utc::now().fixed_offset(),
        };
        info!(session = %self.id, seq = self.seq, stage = %stage, "stage");
        // no subscribers is fine
        let _ = self.gateway.events.send(event.clone());
        event
    }

    fn fail(&mut self, during: Stage, kind: &str, message: String) -> StageEvent {
        self.emit(
            Stage::Failed,
            json!({"stage": during, "error": {"kind": kind, "message": message}}),
        )
    }
}

fn window_json(event: &ResolvedEvent) -> Value {
    json!({
        "title": event.title,
        "start": format_instant(&event.start),
        "end": format_instant(&event.end),
        "duration_minutes": event.duration_minutes(),
    })
}

fn record_summary(record: &EventRecord) -> Value {
    json!({
        "id": record.id,
        "title": record.title,
        "start": format_instant(&record.start),
        "end": format_instant(&record.end),
    })
}

impl Gateway {
    pub fn new(config: GatewayConfig, backends: Backends) -> Result<Self, GatewayError> {
        config.validate()?;
        let store = Arc::new(CalendarStore::open(&config.store_path)?);
        Self::with_store(config, backends, store)
    }

    pub fn with_store(
        config: GatewayConfig,
        backends: Backends,
        store: Arc<CalendarStore>,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        let zone = config.zone()?;
        let (events, _) = broadcast::channel(EVENT_CHANNEL_CAPACITY);
        Ok(Self {
            zone,
            keywords: config.keywords(),
            defaults: config.window_defaults(),
            extract_options: ExtractOptions {
                max_tokens: config.llm.max_tokens,
                keywords: config.keywords(),
            },
            store,
            backends,
            events,
            pending: Mutex::new(HashMap::new()),
            config,
        })
    }

    pub fn from_config(config: GatewayConfig) -> Result<Self, GatewayError> {
        let backends = Backends::from_config(&config)?;
        Self::new(config, backends)
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn store(&self) -> &Arc<CalendarStore> {
        &self.store
    }

    /// Receives every stage event of every session from now on.
    pub fn subscribe(&self) -> broadcast::Receiver<StageEvent> {
        self.events.subscribe()
    }

    pub fn new_session_id() -> String {
        Uuid::new_v4().to_string()
    }

    fn clock(&self) -> ReferenceClock {
        match self.config.fixed_now {
            Some(now) => ReferenceClock::new(now, self.zone),
            None => ReferenceClock::system(self.zone),
        }
    }

    pub async fn handle_utterance(&self, text: &str, session_id: &str) -> StageEvent {
        self.run(UtteranceInput::Text(text.to_string()), session_id)
            .await
    }

    pub async fn handle_audio(&self, clip: AudioClip, session_id: &str) -> StageEvent {
        self.run(UtteranceInput::Audio(clip), session_id).await
    }

    /// Runs one session to its terminal stage and returns that event.
    pub async fn run(&self, input: UtteranceInput, session_id: &str) -> StageEvent {
        let mut session = Session {
            gateway: self,
            id: session_id.to_string(),
            seq: 0,
        };

        let text = match input {
            UtteranceInput::Text(text) => {
                session.emit(Stage::Received, json!({"input": "text", "text": text}));
                text
            }
            UtteranceInput::Audio(clip) => {
                session.emit(
                    Stage::Received,
                    json!({"input": "audio", "bytes": clip.bytes.len()}),
                );
                match transcribe(&clip, self.backends.stt.as_ref()).await {
                    Ok(t) => {
                        session.emit(
                            Stage::Transcribed,
                            json!({"text": t.text, "source": t.source.as_str()}),
                        );
                        t.text
                    }
                    Err(e) => return session.fail(Stage::Transcribed, "stt", e.to_string()),
                }
            }
        };

        if text.trim().is_empty() {
            return session.emit(Stage::Ignored, json!({"reason": "empty_transcript"}));
        }
        let Some(trigger) = detect(&text, &self.keywords) else {
            return session.emit(
                Stage::Ignored,
                json!({"reason": "no_trigger", "text": text}),
            );
        };
        session.emit(
            Stage::Triggered,
            json!({"text": text, "keyword": trigger.keyword, "span": [trigger.span.0, trigger.span.1]}),
        );

        let clock = self.clock();
        let extraction = match extract(
            &text,
            &clock,
            self.backends.llm.as_ref(),
            &self.extract_options,
        )
        .await
        {
            Ok(r) => r,
            Err(e) => return session.fail(Stage::Extracted, "extraction", e.to_string()),
        };
        session.emit(Stage::Extracted, extraction.to_json_value());

        let resolved = match resolve_event(&extraction.intent, &clock, &self.defaults) {
            Ok(r) => r,
            Err(e) => return session.fail(Stage::Resolved, "resolution", e.to_string()),
        };
        let conflicts: Vec<Value> = self
            .store
            .find_conflicts(&resolved)
            .iter()
            .map(record_summary)
            .collect();
        let mut payload = window_json(&resolved);
        payload["conflicts"] = Value::Array(conflicts);
        session.emit(Stage::Resolved, payload);

        if !self.config.confirm_mode {
            return self.commit(&mut session, &resolved).await;
        }
        self.await_decision(&mut session, resolved).await
    }

    async fn await_decision(
        &self,
        session: &mut Session<'_>,
        resolved: ResolvedEvent,
    ) -> StageEvent {
        let pending_id = Uuid::new_v4().to_string();
        let ttl = Duration::from_millis(self.config.pending_ttl_ms);
        let expires_at =
            Utc::now() + chrono::Duration::milliseconds(self.config.pending_ttl_ms as i64);
        let (tx, mut rx) = oneshot::channel();
        self.pending.lock().expect("pending lock poisoned").insert(
            pending_id.clone(),
            PendingSlot {
                expires_at,
                decision: tx,
            },
        );

        let mut payload = window_json(&resolved);
        payload["pending_id"] = Value::from(pending_id.as_str());
        payload["expires_at"] = Value::from(format_instant(&expires_at.fixed_offset()));
        session.emit(Stage::PendingConfirmation, payload);

        let deadline = tokio::time::sleep(ttl);
        tokio::pin!(deadline);
        let mut expired_race = false;
        let decision = loop {
            tokio::select! {
                d = &mut rx => break d.ok(),
                _ = &mut deadline, if !expired_race => {
                    let removed = self.pending.lock().expect("pending lock poisoned").remove(&pending_id);
                    if removed.is_some() {
                        break None;
                    }
                    // a confirm/cancel took the slot first; its decision is in flight
                    expired_race = true;
                }
            }
        };

        match decision {
            Some(Decision::Confirm(reply)) => {
                let event = self.commit(session, &resolved).await;
                let _ = reply.send(event.clone());
                event
            }
            Some(Decision::Cancel(reply)) => {
                let event = session.emit(
                    Stage::Cancelled,
                    json!({"pending_id": pending_id, "reason": "operator"}),
                );
                let _ = reply.send(event.clone());
                event
            }
            None => session.emit(
                Stage::Cancelled,
                json!({"pending_id": pending_id, "reason": "expired"}),
            ),
        }
    }

    async fn commit(&self, session: &mut Session<'_>, resolved: &ResolvedEvent) -> StageEvent {
        let record = match self.store.create_event(resolved) {
            Ok(r) => r,
            Err(e) => return session.fail(Stage::Created, "store", e.to_string()),
        };
        let sync = match &self.backends.provider {
            None => json!({"status": "skipped"}),
            Some(client) => match sync_external(&self.store, &record.id, client).await {
                Ok(external_id) => json!({"status": "synced", "external_id": external_id}),
                Err(e) => {
                    warn!(record = %record.id, error = %e, "provider sync failed");
                    json!({"status": "failed", "error": e.to_string()})
                }
            },
        };
        let mut payload = window_json(resolved);
        payload["record_id"] = Value::from(record.id.as_str());
        payload["sync"] = sync;
        session.emit(Stage::Created, payload)
    }

    fn take_pending(&self, pending_id: &str) -> Result<PendingSlot, GatewayError> {
        let mut pending = self.pending.lock().expect("pending lock poisoned");
        let slot = pending
            .remove(pending_id)
            .ok_or_else(|| GatewayError::UnknownPending(pending_id.to_string()))?;
        if slot.expires_at <= Utc::now() {
            // the session's own timer reports the expiry
            return Err(GatewayError::UnknownPending(pending_id.to_string()));
        }
        Ok(slot)
    }

    async fn decide(
        &self,
        pending_id: &str,
        make: fn(oneshot::Sender<StageEvent>) -> Decision,
    ) -> Result<StageEvent, GatewayError> {
        let slot = self.take_pending(pending_id)?;
        let (reply_tx, reply_rx) = oneshot::channel();
        slot.decision
            .send(make(reply_tx))
            .map_err(|_| GatewayError::SessionGone)?;
        reply_rx.await.map_err(|_| GatewayError::SessionGone)
    }

    /// Commits a pending event; returns its `created` (or `failed`) event.
    pub async fn confirm(&self, pending_id: &str) -> Result<StageEvent, GatewayError> {
        self.decide(pending_id, Decision::Confirm).await
    }

    /// Discards a pending event; returns its `cancelled` event.
    pub async fn cancel(&self, pending_id: &str) -> Result<StageEvent, GatewayError> {
        self.decide(pending_id, Decision::Cancel).await
    }

    pub fn pending_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .pending
            .lock()
            .expect("pending lock poisoned")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn list_events(
        &self,
        start: &DateTime<FixedOffset>,
        end: &DateTime<FixedOffset>,
    ) -> Vec<EventRecord> {
        self.store.list_events(start, end)
    }
}
