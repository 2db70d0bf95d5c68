mod common;

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};
use vsched::gateway::{check_session, AudioClip, Gateway, Stage};
use vsched::intent::MockLlm;

use common::*;

#[tokio::test]
async fn text_utterance_runs_to_created() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let mut rx = gw.subscribe();
    let last = gw.handle_utterance(ABSTRACT_UTTERANCE, "s1").await;
    assert_eq!(last.stage, Stage::Created);

    let events = collect_session(&mut rx, "s1").await;
    check_session(&events).unwrap();
    assert_eq!(
        stages(&events),
        [
            Stage::Received,
            Stage::Triggered,
            Stage::Extracted,
            Stage::Resolved,
            Stage::Created
        ]
    );
    assert_eq!(events[1].payload["keyword"], "schedule");
    assert_eq!(events[1].payload["span"], json!([0, 8]));
    assert_eq!(events[2].payload["provenance"], "fallback");
    assert_eq!(events[2].payload["intent"]["attendee"], "Mr. Smith");
    assert_eq!(events[3].payload["start"], "2025-01-21T14:00:00-07:00");
    assert_eq!(events[3].payload["end"], "2025-01-21T14:30:00-07:00");
    assert_eq!(events[3].payload["conflicts"], json!([]));
    assert_eq!(events[4].payload["sync"]["status"], "skipped");

    let records = gw.store().records();
    assert_eq!(records.len(), 1);
    assert_eq!(
        records[0].id,
        events[4].payload["record_id"].as_str().unwrap()
    );
    assert_eq!(records[0].title, "Follow-up with Mr. Smith");
}

#[tokio::test]
async fn second_booking_reports_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let first = gw.handle_utterance(ABSTRACT_UTTERANCE, "a").await;
    let mut rx = gw.subscribe();
    gw.handle_utterance("Book a call with Dr. Adams next Tuesday at 2:15 pm", "b")
        .await;
    let events = collect_session(&mut rx, "b").await;
    let conflicts = events[3].payload["conflicts"].as_array().unwrap();
    assert_eq!(conflicts.len(), 1);
    assert_eq!(conflicts[0]["id"], first.payload["record_id"]);
    // conflicts are advisory
    assert_eq!(events.last().unwrap().stage, Stage::Created);
    assert_eq!(gw.store().len(), 2);
}

#[tokio::test]
async fn no_trigger_and_empty_are_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let mut rx = gw.subscribe();

    gw.handle_utterance("What's the weather tomorrow?", "n")
        .await;
    let events = collect_session(&mut rx, "n").await;
    check_session(&events).unwrap();
    assert_eq!(stages(&events), [Stage::Received, Stage::Ignored]);
    assert_eq!(events[1].payload["reason"], "no_trigger");

    // "rescheduled" is not the keyword "schedule"
    gw.handle_utterance("It was rescheduled already", "r").await;
    let events = collect_session(&mut rx, "r").await;
    assert_eq!(events[1].payload["reason"], "no_trigger");

    gw.handle_utterance("   ", "e").await;
    let events = collect_session(&mut rx, "e").await;
    assert_eq!(stages(&events), [Stage::Received, Stage::Ignored]);
    assert_eq!(events[1].payload["reason"], "empty_transcript");
    assert!(gw.store().is_empty());
}

#[tokio::test]
async fn unresolvable_utterance_fails_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let mut rx = gw.subscribe();
    let last = gw.handle_utterance("Schedule it", "f").await;
    assert_eq!(last.stage, Stage::Failed);
    let events = collect_session(&mut rx, "f").await;
    check_session(&events).unwrap();
    assert_eq!(
        stages(&events),
        [Stage::Received, Stage::Triggered, Stage::Failed]
    );
    assert_eq!(last.payload["stage"], "extracted");
    assert_eq!(last.payload["error"]["kind"], "extraction");
    assert!(gw.store().is_empty());
    assert!(!dir.path().join("calendar.json").exists());
}

#[tokio::test]
async fn bad_time_fails_at_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let last = gw
        .handle_utterance("Schedule a call with Dr. Kim tomorrow at 25", "t")
        .await;
    assert_eq!(last.stage, Stage::Failed);
    assert_eq!(last.payload["stage"], "resolved");
    assert_eq!(last.payload["error"]["kind"], "resolution");
    assert!(gw.store().is_empty());
}

#[tokio::test]
async fn llm_reply_is_used_when_valid() {
    let dir = tempfile::tempdir().unwrap();
    let reply = "Sure! ```json\n{\"action\":\"create_event\",\"attendee\":\"Dr. Patel\",\
                 \"date_expression\":\"tomorrow\",\"time_expression\":\"3 pm\",\
                 \"duration_minutes\":45,\"description\":\"consult\"}\n```";
    let gw = gateway_with(test_config(dir.path()), Arc::new(MockLlm::replies([reply])));
    let mut rx = gw.subscribe();
    gw.handle_utterance(
        "Schedule a consult with Dr. Patel tomorrow at 3 pm for 45 minutes",
        "l",
    )
    .await;
    let events = collect_session(&mut rx, "l").await;
    assert_eq!(events[2].payload["provenance"], "llm");
    assert_eq!(events[2].payload["raw_response"], reply);
    assert_eq!(events[3].payload["start"], "2025-01-16T15:00:00-07:00");
    assert_eq!(events[3].payload["end"], "2025-01-16T15:45:00-07:00");
    assert_eq!(events[3].payload["title"], "Consult with Dr. Patel");
}

#[tokio::test]
async fn audio_runs_through_mock_transcription() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = dir.path().join("fixtures");
    std::fs::create_dir(&fixtures).unwrap();
    let wav = write_fixture_pair(&fixtures, "patel", INTRO_UTTERANCE);
    let mut config = test_config(dir.path());
    config.stt.fixture_dir = Some(fixtures.clone());
    let gw = offline_gateway(config);
    let mut rx = gw.subscribe();

    gw.handle_audio(AudioClip::from_file(&wav).unwrap(), "a1")
        .await;
    let events = collect_session(&mut rx, "a1").await;
    check_session(&events).unwrap();
    assert_eq!(
        stages(&events),
        [
            Stage::Received,
            Stage::Transcribed,
            Stage::Triggered,
            Stage::Extracted,
            Stage::Resolved,
            Stage::Created
        ]
    );
    assert_eq!(events[0].payload["input"], "audio");
    assert_eq!(
        events[1].payload,
        json!({"text": INTRO_UTTERANCE, "source": "mock"})
    );
    assert_eq!(events[4].payload["start"], "2025-01-17T09:00:00-07:00");
    assert_eq!(events[4].payload["title"], "Meeting with Dr. Patel");

    // upload without a path, matched by content
    gw.handle_audio(AudioClip::from_bytes(silent_wav()), "a2")
        .await;
    let events = collect_session(&mut rx, "a2").await;
    assert_eq!(events.last().unwrap().stage, Stage::Created);
}

#[tokio::test]
async fn bad_audio_fails_at_transcription() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let mut rx = gw.subscribe();
    gw.handle_audio(AudioClip::from_bytes(b"not a wav".to_vec()), "x")
        .await;
    let events = collect_session(&mut rx, "x").await;
    check_session(&events).unwrap();
    assert_eq!(stages(&events), [Stage::Received, Stage::Failed]);
    assert_eq!(events[1].payload["stage"], "transcribed");
    assert_eq!(events[1].payload["error"]["kind"], "stt");
}

fn confirm_gateway(dir: &std::path::Path, ttl_ms: u64) -> Arc<Gateway> {
    let mut config = test_config(dir);
    config.confirm_mode = true;
    config.pending_ttl_ms = ttl_ms;
    offline_gateway(config)
}

async fn start_pending(gw: &Arc<Gateway>, session: &str) -> (tokio::task::JoinHandle<()>, String) {
    let mut rx = gw.subscribe();
    let runner = {
        let gw = gw.clone();
        let session = session.to_string();
        tokio::spawn(async move {
            gw.handle_utterance(ABSTRACT_UTTERANCE, &session).await;
        })
    };
    loop {
        let e = rx.recv().await.unwrap();
        if e.session_id == session && e.stage == Stage::PendingConfirmation {
            return (
                runner,
                e.payload["pending_id"].as_str().unwrap().to_string(),
            );
        }
    }
}

#[tokio::test]
async fn confirm_commits_pending_event() {
    let dir = tempfile::tempdir().unwrap();
    let gw = confirm_gateway(dir.path(), 60_000);
    let mut rx = gw.subscribe();
    let (runner, pending_id) = start_pending(&gw, "c").await;
    assert!(gw.store().is_empty());
    assert_eq!(gw.pending_ids(), std::slice::from_ref(&pending_id));

    let created = gw.confirm(&pending_id).await.unwrap();
    assert_eq!(created.stage, Stage::Created);
    runner.await.unwrap();
    assert_eq!(gw.store().len(), 1);
    assert!(gw.pending_ids().is_empty());

    let events = collect_session(&mut rx, "c").await;
    check_session(&events).unwrap();
    assert_eq!(
        stages(&events),
        [
            Stage::Received,
            Stage::Triggered,
            Stage::Extracted,
            Stage::Resolved,
            Stage::PendingConfirmation,
            Stage::Created
        ]
    );
    // decisions on a settled id are rejected
    assert!(gw.confirm(&pending_id).await.is_err());
    assert!(gw.cancel("no-such-id").await.is_err());
}

#[tokio::test]
async fn cancel_discards_pending_event() {
    let dir = tempfile::tempdir().unwrap();
    let gw = confirm_gateway(dir.path(), 60_000);
    let mut rx = gw.subscribe();
    let (runner, pending_id) = start_pending(&gw, "k").await;
    let cancelled = gw.cancel(&pending_id).await.unwrap();
    runner.await.unwrap();
    assert_eq!(cancelled.stage, Stage::Cancelled);
    assert_eq!(
        cancelled.payload,
        json!({"pending_id": pending_id, "reason": "operator"})
    );
    assert!(gw.store().is_empty());
    let events = collect_session(&mut rx, "k").await;
    check_session(&events).unwrap();
}

#[tokio::test]
async fn unanswered_pending_event_expires() {
    let dir = tempfile::tempdir().unwrap();
    let gw = confirm_gateway(dir.path(), 100);
    let mut rx = gw.subscribe();
    let (runner, pending_id) = start_pending(&gw, "x").await;
    tokio::time::timeout(Duration::from_secs(5), runner)
        .await
        .unwrap()
        .unwrap();
    let events = collect_session(&mut rx, "x").await;
    check_session(&events).unwrap();
    let last = events.last().unwrap();
    assert_eq!(last.stage, Stage::Cancelled);
    assert_eq!(last.payload["reason"], "expired");
    assert!(gw.store().is_empty());
    assert!(gw.confirm(&pending_id).await.is_err());
}

#[tokio::test]
async fn replay_is_deterministic() {
    let mut runs: Vec<Vec<(u64, Stage, Value)>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let gw = offline_gateway(test_config(dir.path()));
        let mut rx = gw.subscribe();
        gw.handle_utterance(ABSTRACT_UTTERANCE, "replay").await;
        runs.push(masked(&collect_session(&mut rx, "replay").await));
    }
    assert_eq!(runs[0], runs[1]);
}

#[tokio::test]
async fn concurrent_sessions_keep_their_own_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let gw = offline_gateway(test_config(dir.path()));
    let mut rx = gw.subscribe();
    let mut handles = Vec::new();
    for i in 0..8 {
        let gw = gw.clone();
        handles.push(tokio::spawn(async move {
            let text = format!("Book a call with Dr. Kim tomorrow at {}", i + 9);
            gw.handle_utterance(&text, &format!("p{i}")).await
        }));
    }
    for h in handles {
        assert_eq!(h.await.unwrap().stage, Stage::Created);
    }
    let mut by_session: std::collections::HashMap<String, Vec<vsched::gateway::StageEvent>> =
        Default::default();
    while let Ok(e) = rx.try_recv() {
        by_session.entry(e.session_id.clone()).or_default().push(e);
    }
    assert_eq!(by_session.len(), 8);
    for events in by_session.values() {
        check_session(events).unwrap();
    }
    assert_eq!(gw.store().len(), 8);
}
