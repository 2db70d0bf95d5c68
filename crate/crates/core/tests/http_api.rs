mod common;

use std::sync::Arc;

use serde_json::{json, Value};
use vsched::gateway::{check_session, router, Gateway, Stage, StageEvent};

use common::*;

async fn serve(gw: Arc<Gateway>) -> std::net::SocketAddr {
    spawn_server(router(gw)).await
}

#[tokio::test]
async fn health() {
    let dir = tempfile::tempdir().unwrap();
    let addr = serve(offline_gateway(test_config(dir.path()))).await;
    let body: Value = reqwest::get(format!("http://{addr}/api/health"))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(body, json!({"status": "ok"}));
}

#[tokio::test]
async fn utterance_events_reach_every_subscriber() {
    let dir = tempfile::tempdir().unwrap();
    let addr = serve(offline_gateway(test_config(dir.path()))).await;
    let mut a = SseReader::open(addr).await;
    let mut b = SseReader::open(addr).await;
    let session = post_text(addr, ABSTRACT_UTTERANCE).await;

    let ea = a.session(&session).await;
    let eb = b.session(&session).await;
    check_session(&ea).unwrap();
    assert_eq!(ea, eb);
    assert_eq!(ea.last().unwrap().stage, Stage::Created);

    let url = format!(
        "http://{addr}/api/calendar?start={}&end={}",
        "2025-01-21T00:00:00-07:00", "2025-01-22T00:00:00-07:00"
    );
    let listed: Value = reqwest::get(url.replace('+', "%2B"))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let listed = listed.as_array().unwrap();
    assert_eq!(listed.len(), 1);
    assert_eq!(listed[0]["id"], ea.last().unwrap().payload["record_id"]);
    assert_eq!(listed[0]["attendee"], "Mr. Smith");
    assert_eq!(listed[0]["start"], "2025-01-21T14:00:00-07:00");
}

#[tokio::test]
async fn calendar_range_validation() {
    let dir = tempfile::tempdir().unwrap();
    let addr = serve(offline_gateway(test_config(dir.path()))).await;
    let get = |q: &str| reqwest::get(format!("http://{addr}/api/calendar{q}"));
    assert_eq!(get("").await.unwrap().status(), 400);
    assert_eq!(
        get("?start=2025-01-21T00:00:00Z").await.unwrap().status(),
        400
    );
    assert_eq!(
        get("?start=tuesday&end=2025-01-22T00:00:00Z")
            .await
            .unwrap()
            .status(),
        400
    );
    assert_eq!(
        get("?start=2025-01-22T00:00:00Z&end=2025-01-21T00:00:00Z")
            .await
            .unwrap()
            .status(),
        400
    );
    let ok = get("?start=2025-01-21T00:00:00Z&end=2025-01-22T00:00:00Z")
        .await
        .unwrap();
    assert_eq!(ok.status(), 200);
    assert_eq!(ok.json::<Value>().await.unwrap(), json!([]));
}

#[tokio::test]
async fn pending_confirm_and_cancel_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    config.confirm_mode = true;
    let gw = offline_gateway(config);
    let addr = serve(gw.clone()).await;
    let mut sse = SseReader::open(addr).await;
    let http = reqwest::Client::new();

    let s1 = post_text(addr, ABSTRACT_UTTERANCE).await;
    let pending = loop {
        let e = sse.next_event().await;
        if e.session_id == s1 && e.stage == Stage::PendingConfirmation {
            break e;
        }
    };
    let pid = pending.payload["pending_id"].as_str().unwrap();
    assert!(pending.payload["expires_at"].is_string());
    let resp = http
        .post(format!("http://{addr}/api/pending/{pid}/confirm"))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    let created: StageEvent = resp.json().await.unwrap();
    assert_eq!(created.stage, Stage::Created);
    assert_eq!(created.session_id, s1);
    assert_eq!(gw.store().len(), 1);

    // settled ids are unknown
    let again = http
        .post(format!("http://{addr}/api/pending/{pid}/cancel"))
        .send()
        .await
        .unwrap();
    assert_eq!(again.status(), 404);

    let s2 = post_text(addr, INTRO_UTTERANCE).await;
    let pending = loop {
        let e = sse.next_event().await;
        if e.session_id == s2 && e.stage == Stage::PendingConfirmation {
            break e;
        }
    };
    let pid = pending.payload["pending_id"].as_str().unwrap();
    let resp = http
        .post(format!("http://{addr}/api/pending/{pid}/cancel"))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    let cancelled: StageEvent = resp.json().await.unwrap();
    assert_eq!(cancelled.stage, Stage::Cancelled);
    assert_eq!(cancelled.payload["reason"], "operator");
    assert_eq!(gw.store().len(), 1);
}

#[tokio::test]
async fn audio_upload() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = dir.path().join("fixtures");
    std::fs::create_dir(&fixtures).unwrap();
    write_fixture_pair(&fixtures, "patel", INTRO_UTTERANCE);
    let mut config = test_config(dir.path());
    config.stt.fixture_dir = Some(fixtures);
    let addr = serve(offline_gateway(config)).await;
    let mut sse = SseReader::open(addr).await;

    let resp = reqwest::Client::new()
        .post(format!("http://{addr}/api/audio"))
        .header("content-type", "audio/wav")
        .body(silent_wav())
        .send()
        .await
        .unwrap();
    let session = resp.json::<Value>().await.unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let events = sse.session(&session).await;
    check_session(&events).unwrap();
    assert_eq!(events[1].stage, Stage::Transcribed);
    assert_eq!(events.last().unwrap().stage, Stage::Created);
    assert_eq!(
        events.last().unwrap().payload["start"],
        "2025-01-17T09:00:00-07:00"
    );
}
