use thiserror::Error;

use crate::model::IntentFieldError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown IANA timezone {0:?}")]
    UnknownTimezone(String),
    #[error("invalid instant {0}")]
    InvalidInstant(String),
    #[error("event window is empty: start {start} is not before end {end}")]
    EmptyWindow { start: String, end: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("unrecognized date expression {0:?}")]
    UnrecognizedDate(String),
    #[error("unrecognized time expression {0:?}")]
    UnrecognizedTime(String),
    #[error("hour {hour} out of range in {expr:?}")]
    HourOutOfRange { expr: String, hour: u32 },
    #[error("intent has neither a date nor a time expression")]
    NoTemporalExpression,
    #[error("no valid local time near {0}")]
    NoLocalTime(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Why an LLM reply could not be turned into an intent.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no JSON object found in response")]
    NoJsonObject,
    #[error("intent validation failed: {}", join_errors(.0))]
    Invalid(Vec<IntentFieldError>),
}

fn join_errors(errs: &[IntentFieldError]) -> String {
    errs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FallbackError {
    #[error("no date or time expression found in {0:?}")]
    Unresolvable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend timed out after {0} ms")]
    Timeout(u64),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("intent unresolvable; llm: {llm}; fallback: {fallback}")]
    Unresolvable {
        llm: String,
        fallback: FallbackError,
    },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("store file {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error("unsupported store version {0}")]
    Version(u64),
    #[error("no record with id {0}")]
    NotFound(String),
    #[error("record {0} is already synced")]
    AlreadySynced(String),
    #[error("range start must be before range end")]
    EmptyRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("provider unreachable: {0}")]
    Network(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("invalid provider config: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum SyncError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SttError {
    #[error("unreadable audio: {0}")]
    UnreadableAudio(String),
    #[error("no sidecar transcript for {0}")]
    MissingTranscript(String),
    #[error("speech service error: {0}")]
    Service(String),
    #[error("speech service timed out after {0} ms")]
    Timeout(u64),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unknown or expired pending event {0}")]
    UnknownPending(String),
    #[error("session ended before the decision was applied")]
    SessionGone,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(String),
}
