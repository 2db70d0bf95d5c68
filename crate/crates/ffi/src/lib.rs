//! C ABI for the vsched pipeline.
//!
//! Every fallible call returns a [`VschedStatus`]. On failure the message is
//! available from [`vsched_last_error_message`] on the same thread. Strings
//! handed out through `out` parameters are owned by the caller and must be
//! released with [`vsched_string_free`]. Structured results are JSON.
//!
//! Handles ([`VschedStore`], [`VschedGateway`]) are opaque and must be freed
//! with their matching `_free` function. A store handle may be shared across
//! threads; a gateway handle must not be used from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::{DateTime, FixedOffset};
use serde_json::{json, Value};

use vsched::calendar::CalendarStore;
use vsched::gateway::{Gateway, GatewayConfig, StageEvent};
use vsched::intent::extract_fallback;
use vsched::model::{format_instant, validate_intent, ReferenceClock, ResolvedEvent};
use vsched::temporal::{resolve_event, WindowDefaults};
use vsched::trigger::{detect, KeywordSet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VschedStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Intent JSON failed validation.
    InvalidIntent = 3,
    /// No intent could be extracted, or its date/time could not be resolved.
    Unresolvable = 4,
    /// Malformed instant, timezone, range or JSON argument.
    InvalidArgument = 5,
    /// The calendar store could not be read or written.
    Store = 6,
    /// Gateway configuration was rejected.
    Config = 7,
    /// An internal panic was caught at the boundary.
    Panic = 8,
}

/// Local calendar store handle.
pub struct VschedStore {
    inner: CalendarStore,
}

/// Text pipeline handle with its own async runtime.
pub struct VschedGateway {
    runtime: tokio::runtime::Runtime,
    gateway: Gateway,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: VschedStatus,
    message: String,
}

impl Failure {
    fn new(status: VschedStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', "\\0")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Runs `f`, converting failures and panics to a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VschedStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VschedStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {message}"));
            VschedStatus::Panic
        }
    }
}

/// Borrows a NUL-terminated UTF-8 argument.
///
/// # Safety
/// `p` must be NULL or point to a NUL-terminated string that outlives the call.
unsafe fn arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            VschedStatus::NullArgument,
            format!("{name} is NULL"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(VschedStatus::InvalidUtf8, format!("{name}: {e}")))
}

fn check_out<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            VschedStatus::NullArgument,
            format!("{name} is NULL"),
        ));
    }
    Ok(())
}

/// # Safety
/// `out` must be non-NULL and writable.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure::new(VschedStatus::Panic, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn parse_intent(json_text: &str) -> Result<vsched::SchedulingIntent, Failure> {
    validate_intent(json_text).map_err(|errors| {
        let detail: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
        Failure::new(VschedStatus::InvalidIntent, detail.join("; "))
    })
}

fn parse_clock(now: &str, tz: &str) -> Result<ReferenceClock, Failure> {
    ReferenceClock::parse(now, tz)
        .map_err(|e| Failure::new(VschedStatus::InvalidArgument, e.to_string()))
}

fn parse_instant(s: &str, name: &str) -> Result<DateTime<FixedOffset>, Failure> {
    DateTime::parse_from_rfc3339(s)
        .map_err(|e| Failure::new(VschedStatus::InvalidArgument, format!("{name} {s:?}: {e}")))
}

fn resolve(intent_json: &str, now: &str, tz: &str) -> Result<ResolvedEvent, Failure> {
    let intent = parse_intent(intent_json)?;
    let clock = parse_clock(now, tz)?;
    resolve_event(&intent, &clock, &WindowDefaults::default())
        .map_err(|e| Failure::new(VschedStatus::Unresolvable, e.to_string()))
}

fn window_json(event: &ResolvedEvent) -> Value {
    json!({
        "title": event.title,
        "start": format_instant(&event.start),
        "end": format_instant(&event.end),
        "duration_minutes": event.duration_minutes(),
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable value")
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn vsched_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failed call on this thread, or NULL.
/// Valid until the next vsched call on the same thread. Do not free.
#[no_mangle]
pub extern "C" fn vsched_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned through an `out` parameter. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn vsched_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Validates intent JSON and writes its canonical form to `out_json`.
///
/// # Safety
/// `intent_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_validate_intent(
    intent_json: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let intent = parse_intent(arg(intent_json, "intent_json")?)?;
        put_string(out_json, intent.to_json())
    })
}

/// Finds the earliest trigger keyword. Writes `{"keyword","span":[start,end]}`
/// (byte offsets) or `null`. `keywords_json` is a JSON array of strings, or
/// NULL for the defaults.
///
/// # Safety
/// String arguments must be NULL-or-NUL-terminated as documented; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_detect_trigger(
    text: *const c_char,
    keywords_json: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let text = arg(text, "text")?;
        let keywords = if keywords_json.is_null() {
            KeywordSet::default()
        } else {
            let list: Vec<String> = serde_json::from_str(arg(keywords_json, "keywords_json")?)
                .map_err(|e| {
                    Failure::new(VschedStatus::InvalidArgument, format!("keywords_json: {e}"))
                })?;
            KeywordSet::new(list)
        };
        let result = match detect(text, &keywords) {
            Some(m) => json!({"keyword": m.keyword, "span": [m.span.0, m.span.1]}),
            None => Value::Null,
        };
        put_string(out_json, result.to_string())
    })
}

/// Runs the rule-based extractor; writes the intent JSON.
///
/// # Safety
/// `transcript` must be a NUL-terminated string; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_extract_fallback(
    transcript: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let intent = extract_fallback(arg(transcript, "transcript")?)
            .map_err(|e| Failure::new(VschedStatus::Unresolvable, e.to_string()))?;
        put_string(out_json, intent.to_json())
    })
}

/// Resolves an intent against `now` (RFC 3339) in IANA zone `tz`. Writes
/// `{"title","start","end","duration_minutes"}`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_resolve_event(
    intent_json: *const c_char,
    now: *const c_char,
    tz: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let event = resolve(
            arg(intent_json, "intent_json")?,
            arg(now, "now")?,
            arg(tz, "tz")?,
        )?;
        put_string(out_json, window_json(&event).to_string())
    })
}

/// Opens (or starts) a store file.
///
/// # Safety
/// `path` must be NUL-terminated; `out_store` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_store_open(
    path: *const c_char,
    out_store: *mut *mut VschedStore,
) -> VschedStatus {
    guard(|| {
        check_out(out_store, "out_store")?;
        let inner = CalendarStore::open(arg(path, "path")?)
            .map_err(|e| Failure::new(VschedStatus::Store, e.to_string()))?;
        *out_store = Box::into_raw(Box::new(VschedStore { inner }));
        Ok(())
    })
}

/// Releases a store handle. NULL is a no-op.
///
/// # Safety
/// `store` must be NULL or a handle from [`vsched_store_open`], freed once.
#[no_mangle]
pub unsafe extern "C" fn vsched_store_free(store: *mut VschedStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// # Safety
/// `store` must be NULL or a live handle.
unsafe fn store_ref<'a>(store: *const VschedStore) -> Result<&'a VschedStore, Failure> {
    store
        .as_ref()
        .ok_or_else(|| Failure::new(VschedStatus::NullArgument, "store is NULL"))
}

/// Number of records in the store.
///
/// # Safety
/// `store` must be a live handle; `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_store_len(
    store: *const VschedStore,
    out_len: *mut usize,
) -> VschedStatus {
    guard(|| {
        check_out(out_len, "out_len")?;
        *out_len = store_ref(store)?.inner.len();
        Ok(())
    })
}

/// Resolves the intent and commits it. Writes the stored record JSON.
///
/// # Safety
/// `store` must be a live handle; strings NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_store_create_event(
    store: *const VschedStore,
    intent_json: *const c_char,
    now: *const c_char,
    tz: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let store = store_ref(store)?;
        let event = resolve(
            arg(intent_json, "intent_json")?,
            arg(now, "now")?,
            arg(tz, "tz")?,
        )?;
        let record = store
            .inner
            .create_event(&event)
            .map_err(|e| Failure::new(VschedStatus::Store, e.to_string()))?;
        put_string(out_json, to_json(&record))
    })
}

/// Records intersecting `[start, end)`, as a JSON array sorted by start.
///
/// # Safety
/// `store` must be a live handle; strings NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_store_list_events(
    store: *const VschedStore,
    start: *const c_char,
    end: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let store = store_ref(store)?;
        let start = parse_instant(arg(start, "start")?, "start")?;
        let end = parse_instant(arg(end, "end")?, "end")?;
        if start >= end {
            return Err(Failure::new(
                VschedStatus::InvalidArgument,
                "start must be before end",
            ));
        }
        put_string(out_json, to_json(&store.inner.list_events(&start, &end)))
    })
}

/// Records overlapping the window the intent resolves to, as a JSON array.
///
/// # Safety
/// `store` must be a live handle; strings NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_store_find_conflicts(
    store: *const VschedStore,
    intent_json: *const c_char,
    now: *const c_char,
    tz: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let store = store_ref(store)?;
        let event = resolve(
            arg(intent_json, "intent_json")?,
            arg(now, "now")?,
            arg(tz, "tz")?,
        )?;
        put_string(out_json, to_json(&store.inner.find_conflicts(&event)))
    })
}

/// Builds a text pipeline from gateway config JSON (NULL for defaults).
/// Confirmation mode is rejected: there is no operator on this interface.
///
/// # Safety
/// `config_json` must be NULL or NUL-terminated; `out_gateway` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_gateway_new(
    config_json: *const c_char,
    out_gateway: *mut *mut VschedGateway,
) -> VschedStatus {
    guard(|| {
        check_out(out_gateway, "out_gateway")?;
        let config = if config_json.is_null() {
            GatewayConfig::default()
        } else {
            GatewayConfig::from_json(arg(config_json, "config_json")?)
                .map_err(|e| Failure::new(VschedStatus::Config, e.to_string()))?
        };
        if config.confirm_mode {
            return Err(Failure::new(
                VschedStatus::Config,
                "confirm_mode is not supported over the C interface",
            ));
        }
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(1)
            .enable_all()
            .build()
            .map_err(|e| Failure::new(VschedStatus::Config, e.to_string()))?;
        let gateway = {
            let _entered = runtime.enter();
            Gateway::from_config(config)
                .map_err(|e| Failure::new(VschedStatus::Config, e.to_string()))?
        };
        *out_gateway = Box::into_raw(Box::new(VschedGateway { runtime, gateway }));
        Ok(())
    })
}

/// Releases a gateway handle. NULL is a no-op.
///
/// # Safety
/// `gateway` must be NULL or a handle from [`vsched_gateway_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn vsched_gateway_free(gateway: *mut VschedGateway) {
    if !gateway.is_null() {
        drop(Box::from_raw(gateway));
    }
}

/// Runs one utterance to its terminal stage. Writes the session's stage
/// events as a JSON array. A pipeline failure is reported as a `failed`
/// event, not as an error status.
///
/// # Safety
/// `gateway` must be a live handle; `text` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vsched_gateway_handle_utterance(
    gateway: *const VschedGateway,
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> VschedStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let handle = gateway
            .as_ref()
            .ok_or_else(|| Failure::new(VschedStatus::NullArgument, "gateway is NULL"))?;
        let text = arg(text, "text")?;
        let session_id = Gateway::new_session_id();
        let mut rx = handle.gateway.subscribe();
        handle
            .runtime
            .block_on(handle.gateway.handle_utterance(text, &session_id));
        let mut events: Vec<StageEvent> = Vec::new();
        while let Ok(e) = rx.try_recv() {
            if e.session_id == session_id {
                events.push(e);
            }
        }
        put_string(out_json, to_json(&events))
    })
}
