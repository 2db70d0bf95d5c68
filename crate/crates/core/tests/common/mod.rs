#![allow(dead_code)]

use std::collections::HashMap;
use std::io::Cursor;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use vsched::gateway::{Backends, Gateway, GatewayConfig, MockStt, Stage, StageEvent};
use vsched::intent::{LlmBackend, MockLlm};

pub const ABSTRACT_UTTERANCE: &str = "Schedule a follow-up with Mr. Smith next Tuesday at 2";
pub const INTRO_UTTERANCE: &str = "Schedule a meeting with Dr. Patel next Friday";
pub const FIXED_NOW: &str = "2025-01-15T10:00:00-07:00";

pub async fn spawn_server(router: Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router).await.unwrap();
    });
    addr
}

pub fn silent_wav() -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec).unwrap();
        for i in 0..1600 {
            w.write_sample(((i % 50) as i16 - 25) * 10).unwrap();
        }
        w.finalize().unwrap();
    }
    cursor.into_inner()
}

/// Writes `<name>.wav` and its sidecar `<name>.txt`.
pub fn write_fixture_pair(dir: &Path, name: &str, transcript: &str) -> std::path::PathBuf {
    let wav = dir.join(format!("{name}.wav"));
    std::fs::write(&wav, silent_wav()).unwrap();
    std::fs::write(dir.join(format!("{name}.txt")), format!("{transcript}\n")).unwrap();
    wav
}

pub fn test_config(dir: &Path) -> GatewayConfig {
    GatewayConfig {
        timezone: "America/Phoenix".into(),
        fixed_now: Some(chrono::DateTime::parse_from_rfc3339(FIXED_NOW).unwrap()),
        store_path: dir.join("calendar.json"),
        ..GatewayConfig::default()
    }
}

pub fn gateway_with(config: GatewayConfig, llm: Arc<dyn LlmBackend>) -> Arc<Gateway> {
    let backends = Backends {
        llm,
        stt: Arc::new(MockStt {
            fixture_dir: config.stt.fixture_dir.clone(),
        }),
        provider: None,
    };
    Arc::new(Gateway::new(config, backends).unwrap())
}

pub fn offline_gateway(config: GatewayConfig) -> Arc<Gateway> {
    gateway_with(config, Arc::new(MockLlm::Unreachable))
}

/// Collects one session's events from a subscription until its terminal stage.
pub async fn collect_session(
    rx: &mut tokio::sync::broadcast::Receiver<StageEvent>,
    session_id: &str,
) -> Vec<StageEvent> {
    let mut out = Vec::new();
    loop {
        let e = tokio::time::timeout(Duration::from_secs(10), rx.recv())
            .await
            .expect("stage event within 10s")
            .expect("channel open");
        if e.session_id != session_id {
            continue;
        }
        let done = e.stage.is_terminal();
        out.push(e);
        if done {
            return out;
        }
    }
}

pub fn stages(events: &[StageEvent]) -> Vec<Stage> {
    events.iter().map(|e| e.stage).collect()
}

/// Payload with generated ids and wall-clock stamps blanked out.
pub fn masked_payload(payload: &Value) -> Value {
    let mut p = payload.clone();
    if let Some(obj) = p.as_object_mut() {
        for key in ["record_id", "pending_id", "expires_at"] {
            if obj.contains_key(key) {
                obj.insert(key.into(), Value::from("<masked>"));
            }
        }
        if let Some(conflicts) = obj.get_mut("conflicts").and_then(Value::as_array_mut) {
            for c in conflicts {
                c["id"] = Value::from("<masked>");
            }
        }
    }
    p
}

pub fn masked(events: &[StageEvent]) -> Vec<(u64, Stage, Value)> {
    events
        .iter()
        .map(|e| (e.seq, e.stage, masked_payload(&e.payload)))
        .collect()
}

/// Scripted remote calendar honouring idempotency keys.
#[derive(Default)]
pub struct MockProvider {
    /// idempotency key -> provider event id
    pub events: HashMap<String, String>,
    pub keys_seen: Vec<String>,
    pub bodies: Vec<Value>,
    pub auth_headers: Vec<String>,
    pub reject_auth: bool,
    /// Delay applied to the first request only.
    pub first_delay_ms: u64,
    pub fixed_id: Option<String>,
}

pub type SharedProvider = Arc<Mutex<MockProvider>>;

async fn provider_insert(
    State(state): State<SharedProvider>,
    UrlPath(calendar): UrlPath<String>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Response {
    let (delay, response) = {
        let mut s = state.lock().unwrap();
        let auth = headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string();
        s.auth_headers.push(auth);
        if s.reject_auth {
            return (
                StatusCode::UNAUTHORIZED,
                Json(json!({"error": "invalid_token"})),
            )
                .into_response();
        }
        let key = headers
            .get("idempotency-key")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string();
        let first = s.keys_seen.is_empty();
        s.keys_seen.push(key.clone());
        s.bodies.push(body);
        let next = s
            .fixed_id
            .clone()
            .unwrap_or_else(|| format!("evt_{}", s.events.len() + 1));
        let id = s.events.entry(key).or_insert(next).clone();
        let delay = if first { s.first_delay_ms } else { 0 };
        (
            delay,
            Json(json!({"id": id, "calendar": calendar, "status": "confirmed"})).into_response(),
        )
    };
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }
    response
}

pub async fn spawn_provider(state: SharedProvider) -> SocketAddr {
    let router = Router::new()
        .route("/v3/calendars/{calendar}/events", post(provider_insert))
        .with_state(state);
    spawn_server(router).await
}

/// Reads `data:` frames from an open SSE response.
pub struct SseReader {
    resp: reqwest::Response,
    buf: String,
}

impl SseReader {
    pub async fn open(addr: std::net::SocketAddr) -> Self {
        let resp = reqwest::get(format!("http://{addr}/api/stream"))
            .await
            .unwrap();
        assert_eq!(resp.status(), 200);
        assert!(resp.headers()["content-type"]
            .to_str()
            .unwrap()
            .starts_with("text/event-stream"));
        let mut reader = Self {
            resp,
            buf: String::new(),
        };
        // the first frame is the ": connected" comment
        let first = reader.next_frame().await;
        assert!(first.starts_with(":"), "{first:?}");
        reader
    }

    pub async fn next_frame(&mut self) -> String {
        loop {
            if let Some(pos) = self.buf.find("\n\n") {
                let frame = self.buf[..pos].to_string();
                self.buf.drain(..pos + 2);
                return frame;
            }
            let chunk = tokio::time::timeout(Duration::from_secs(10), self.resp.chunk())
                .await
                .expect("sse frame within 10s")
                .unwrap()
                .expect("stream open");
            self.buf.push_str(std::str::from_utf8(&chunk).unwrap());
        }
    }

    pub async fn next_event(&mut self) -> StageEvent {
        loop {
            let frame = self.next_frame().await;
            let data: String = frame
                .lines()
                .filter_map(|l| l.strip_prefix("data:"))
                .map(|l| l.strip_prefix(' ').unwrap_or(l))
                .collect();
            if !data.is_empty() {
                return serde_json::from_str(&data).unwrap();
            }
        }
    }

    pub async fn session(&mut self, session_id: &str) -> Vec<StageEvent> {
        let mut out = Vec::new();
        loop {
            let e = self.next_event().await;
            if e.session_id != session_id {
                continue;
            }
            let done = e.stage.is_terminal();
            out.push(e);
            if done {
                return out;
            }
        }
    }
}

pub async fn post_text(addr: std::net::SocketAddr, text: &str) -> String {
    let resp = reqwest::Client::new()
        .post(format!("http://{addr}/api/utterance"))
        .json(&json!({"text": text}))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    let body: Value = resp.json().await.unwrap();
    body["session_id"].as_str().unwrap().to_string()
}
