//! HTTP + SSE surface for the monitor UI.

use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::DateTime;
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use serde_json::json;
use tokio_stream::wrappers::errors::BroadcastStreamRecvError;
use tokio_stream::wrappers::BroadcastStream;
use tracing::{info, warn};

use crate::error::GatewayError;

use super::pipeline::{Gateway, UtteranceInput};
use super::stt::AudioClip;

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/utterance", post(post_utterance))
        .route("/api/audio", post(post_audio))
        .route("/api/stream", get(stream))
        .route("/api/calendar", get(calendar))
        .route("/api/pending/{id}/confirm", post(confirm))
        .route("/api/pending/{id}/cancel", post(cancel))
        .with_state(gateway)
}

/// Binds the configured address and serves until ctrl-c.
pub async fn serve(gateway: Arc<Gateway>) -> Result<(), GatewayError> {
    let addr = gateway.config().listen.clone();
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| GatewayError::Bind {
            addr: addr.clone(),
            source,
        })?;
    info!(%addr, "gateway listening");
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| GatewayError::Serve(e.to_string()))
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({"error": message.into()}))).into_response()
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Deserialize)]
struct UtteranceBody {
    text: String,
}

fn spawn_session(gateway: Arc<Gateway>, input: UtteranceInput) -> Json<serde_json::Value> {
    let session_id = Gateway::new_session_id();
    let id = session_id.clone();
    tokio::spawn(async move {
        gateway.run(input, &id).await;
    });
    Json(json!({"session_id": session_id}))
}

async fn post_utterance(
    State(gateway): State<Arc<Gateway>>,
    Json(body): Json<UtteranceBody>,
) -> Response {
    spawn_session(gateway, UtteranceInput::Text(body.text)).into_response()
}

async fn post_audio(State(gateway): State<Arc<Gateway>>, body: Bytes) -> Response {
    spawn_session(
        gateway,
        UtteranceInput::Audio(AudioClip::from_bytes(body.to_vec())),
    )
    .into_response()
}

async fn stream(
    State(gateway): State<Arc<Gateway>>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    // subscribe before the response starts so nothing published after the
    // client sees headers is missed
    let rx = gateway.subscribe();
    let hello = stream::once(async { Ok(Event::default().comment("connected")) });
    let events = BroadcastStream::new(rx).filter_map(|item| async move {
        match item {
            Ok(event) => Some(Ok(Event::default().data(event.to_json_line()))),
            Err(BroadcastStreamRecvError::Lagged(n)) => {
                warn!(skipped = n, "slow SSE subscriber lagged");
                None
            }
        }
    });
    Sse::new(hello.chain(events)).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}

#[derive(Deserialize)]
struct RangeQuery {
    start: Option<String>,
    end: Option<String>,
}

async fn calendar(State(gateway): State<Arc<Gateway>>, Query(q): Query<RangeQuery>) -> Response {
    let (Some(start), Some(end)) = (q.start, q.end) else {
        return error(
            StatusCode::BAD_REQUEST,
            "start and end query parameters are required",
        );
    };
    let parse = |s: &str| DateTime::parse_from_rfc3339(s);
    let (start, end) = match (parse(&start), parse(&end)) {
        (Ok(s), Ok(e)) => (s, e),
        _ => {
            return error(
                StatusCode::BAD_REQUEST,
                "start and end must be RFC 3339 instants",
            )
        }
    };
    if start >= end {
        return error(StatusCode::BAD_REQUEST, "start must be before end");
    }
    Json(gateway.list_events(&start, &end)).into_response()
}

fn decision_response(result: Result<super::stage::StageEvent, GatewayError>) -> Response {
    match result {
        Ok(event) => Json(event).into_response(),
        Err(e @ GatewayError::UnknownPending(_)) => error(StatusCode::NOT_FOUND, e.to_string()),
        Err(e) => error(StatusCode::CONFLICT, e.to_string()),
    }
}

async fn confirm(State(gateway): State<Arc<Gateway>>, Path(id): Path<String>) -> Response {
    decision_response(gateway.confirm(&id).await)
}

async fn cancel(State(gateway): State<Arc<Gateway>>, Path(id): Path<String>) -> Response {
    decision_response(gateway.cancel(&id).await)
}
