//! Shared domain types and the strict intent JSON contract.
//!
//! The intent wire form is a single JSON object whose keys are exactly
//! `action`, `attendee`, `date_expression`, `time_expression`,
//! `duration_minutes` and `description`. Absent values are written as
//! explicit `null`; unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, TimeZone};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::ModelError;

pub const MIN_DURATION_MINUTES: u32 = 1;
pub const MAX_DURATION_MINUTES: u32 = 1440;

/// Keys of the intent object, in canonical serialization order.
pub const INTENT_KEYS: [&str; 6] = [
    "action",
    "attendee",
    "date_expression",
    "time_expression",
    "duration_minutes",
    "description",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptSource {
    Mock,
    Cloud,
    /// Text typed or passed directly, never went through speech recognition.
    Text,
}

impl TranscriptSource {
    pub fn as_str(self) -> &'static str {
        match self {
            TranscriptSource::Mock => "mock",
            TranscriptSource::Cloud => "cloud",
            TranscriptSource::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub text: String,
    pub source: TranscriptSource,
    #[serde(with = "crate::model::rfc3339")]
    pub captured_at: DateTime<FixedOffset>,
}

impl Transcript {
    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntentAction {
    #[default]
    CreateEvent,
}

impl IntentAction {
    pub fn as_str(self) -> &'static str {
        match self {
            IntentAction::CreateEvent => "create_event",
        }
    }
}

/// The structured scheduling parameters extracted from one utterance.
///
/// String fields, when present, are never blank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SchedulingIntent {
    pub action: IntentAction,
    pub attendee: Option<String>,
    pub date_expression: Option<String>,
    pub time_expression: Option<String>,
    pub duration_minutes: Option<u32>,
    pub description: Option<String>,
}

impl SchedulingIntent {
    /// True when at least one temporal expression is present.
    pub fn is_resolvable(&self) -> bool {
        self.date_expression.is_some() || self.time_expression.is_some()
    }

    /// Canonical JSON value with every key present, absent fields as `null`.
    pub fn to_json_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("action".into(), Value::from(self.action.as_str()));
        map.insert("attendee".into(), opt_str(&self.attendee));
        map.insert("date_expression".into(), opt_str(&self.date_expression));
        map.insert("time_expression".into(), opt_str(&self.time_expression));
        map.insert(
            "duration_minutes".into(),
            self.duration_minutes.map_or(Value::Null, Value::from),
        );
        map.insert("description".into(), opt_str(&self.description));
        Value::Object(map)
    }

    /// Canonical compact JSON text. Key order follows [`INTENT_KEYS`].
    pub fn to_json(&self) -> String {
        // serde_json's Map is a BTreeMap without `preserve_order`, so the
        // canonical key order is written by hand.
        let mut out = String::from("{");
        for (i, key) in INTENT_KEYS.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&Value::from(*key).to_string());
            out.push(':');
            let v = match *key {
                "action" => Value::from(self.action.as_str()),
                "attendee" => opt_str(&self.attendee),
                "date_expression" => opt_str(&self.date_expression),
                "time_expression" => opt_str(&self.time_expression),
                "duration_minutes" => self.duration_minutes.map_or(Value::Null, Value::from),
                _ => opt_str(&self.description),
            };
            out.push_str(&v.to_string());
        }
        out.push('}');
        out
    }
}

fn opt_str(v: &Option<String>) -> Value {
    v.as_ref().map_or(Value::Null, |s| Value::from(s.as_str()))
}

impl Serialize for SchedulingIntent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SchedulingIntent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        validate_value(&value).map_err(|errs| {
            serde::de::Error::custom(
                errs.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        })
    }
}

/// One violated rule of the intent contract.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntentFieldError {
    #[error("not JSON: {0}")]
    NotJson(String),
    #[error("top-level value is not an object")]
    NotObject,
    #[error("missing field action")]
    MissingAction,
    #[error("invalid action {0:?}, expected \"create_event\"")]
    InvalidAction(String),
    #[error("field {field} has wrong type, expected {expected}")]
    WrongType {
        field: &'static str,
        expected: &'static str,
    },
    #[error("duration_minutes out of range: {0} (expected 1..=1440)")]
    DurationOutOfRange(String),
    #[error("unknown field {0:?}")]
    UnknownField(String),
}

impl IntentFieldError {
    /// Field the error refers to, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            IntentFieldError::MissingAction | IntentFieldError::InvalidAction(_) => Some("action"),
            IntentFieldError::WrongType { field, .. } => Some(field),
            IntentFieldError::DurationOutOfRange(_) => Some("duration_minutes"),
            IntentFieldError::UnknownField(f) => Some(f),
            IntentFieldError::NotJson(_) | IntentFieldError::NotObject => None,
        }
    }
}

/// Validates text claimed to be an intent JSON object.
///
/// Returns every violated rule, not just the first.
pub fn validate_intent(json_text: &str) -> Result<SchedulingIntent, Vec<IntentFieldError>> {
    let value: Value = serde_json::from_str(json_text)
        .map_err(|e| vec![IntentFieldError::NotJson(e.to_string())])?;
    validate_value(&value)
}

/// Byte-level entry point; non UTF-8 input is reported as not-JSON.
pub fn validate_intent_bytes(bytes: &[u8]) -> Result<SchedulingIntent, Vec<IntentFieldError>> {
    match std::str::from_utf8(bytes) {
        Ok(s) => validate_intent(s),
        Err(e) => Err(vec![IntentFieldError::NotJson(e.to_string())]),
    }
}

pub fn validate_value(value: &Value) -> Result<SchedulingIntent, Vec<IntentFieldError>> {
    let Value::Object(map) = value else {
        return Err(vec![IntentFieldError::NotObject]);
    };
    let mut errors = Vec::new();
    let mut intent = SchedulingIntent::default();

    for key in map.keys() {
        if !INTENT_KEYS.contains(&key.as_str()) {
            errors.push(IntentFieldError::UnknownField(key.clone()));
        }
    }

    match map.get("action") {
        None | Some(Value::Null) => errors.push(IntentFieldError::MissingAction),
        Some(Value::String(s)) if s == "create_event" => intent.action = IntentAction::CreateEvent,
        Some(Value::String(s)) => errors.push(IntentFieldError::InvalidAction(s.clone())),
        Some(other) => errors.push(IntentFieldError::InvalidAction(other.to_string())),
    }

    for (field, slot) in [
        ("attendee", &mut intent.attendee),
        ("date_expression", &mut intent.date_expression),
        ("time_expression", &mut intent.time_expression),
        ("description", &mut intent.description),
    ] {
        match map.get(field) {
            None | Some(Value::Null) => {}
            Some(Value::String(s)) => {
                // blank strings are how some models spell "absent"
                let trimmed = s.trim();
                if !trimmed.is_empty() {
                    *slot = Some(trimmed.to_string());
                }
            }
            Some(_) => errors.push(IntentFieldError::WrongType {
                field: static_key(field),
                expected: "string or null",
            }),
        }
    }

    match map.get("duration_minutes") {
        None | Some(Value::Null) => {}
        Some(Value::Number(n)) => {
            if let Some(i) = n.as_i64() {
                if (MIN_DURATION_MINUTES as i64..=MAX_DURATION_MINUTES as i64).contains(&i) {
                    intent.duration_minutes = Some(i as u32);
                } else {
                    errors.push(IntentFieldError::DurationOutOfRange(i.to_string()));
                }
            } else if n.is_u64() {
                errors.push(IntentFieldError::DurationOutOfRange(n.to_string()));
            } else {
                errors.push(IntentFieldError::WrongType {
                    field: "duration_minutes",
                    expected: "positive integer or null",
                });
            }
        }
        Some(_) => errors.push(IntentFieldError::WrongType {
            field: "duration_minutes",
            expected: "positive integer or null",
        }),
    }

    if errors.is_empty() {
        Ok(intent)
    } else {
        Err(errors)
    }
}

fn static_key(field: &str) -> &'static str {
    INTENT_KEYS
        .iter()
        .find(|k| **k == field)
        .copied()
        .unwrap_or("unknown")
}

/// An intent whose temporal expressions have been resolved to instants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedEvent {
    pub intent: SchedulingIntent,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    pub title: String,
}

impl ResolvedEvent {
    pub fn new(
        intent: SchedulingIntent,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    ) -> Result<Self, ModelError> {
        if start >= end {
            return Err(ModelError::EmptyWindow {
                start: start.to_rfc3339(),
                end: end.to_rfc3339(),
            });
        }
        let title = derive_title(intent.description.as_deref(), intent.attendee.as_deref());
        Ok(Self {
            intent,
            start,
            end,
            title,
        })
    }

    pub fn duration_minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }

    pub fn overlaps(&self, start: &DateTime<FixedOffset>, end: &DateTime<FixedOffset>) -> bool {
        self.start < *end && *start < self.end
    }
}

/// Event title: capitalized description plus `" with <attendee>"`.
///
/// Falls back to `"Appointment with <attendee>"`, then `"Appointment"`.
pub fn derive_title(description: Option<&str>, attendee: Option<&str>) -> String {
    let description = description.map(str::trim).filter(|s| !s.is_empty());
    let attendee = attendee.map(str::trim).filter(|s| !s.is_empty());
    let head = match description {
        Some(d) => capitalize_first(d),
        None => "Appointment".to_string(),
    };
    match attendee {
        Some(a) => format!("{head} with {a}"),
        None => head,
    }
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A calendar event as persisted in the local store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub title: String,
    #[serde(with = "crate::model::rfc3339")]
    pub start: DateTime<FixedOffset>,
    #[serde(with = "crate::model::rfc3339")]
    pub end: DateTime<FixedOffset>,
    pub attendee: Option<String>,
    pub description: Option<String>,
    pub external_id: Option<String>,
    #[serde(with = "crate::model::rfc3339")]
    pub created_at: DateTime<FixedOffset>,
}

impl EventRecord {
    pub fn from_resolved(
        id: String,
        event: &ResolvedEvent,
        created_at: DateTime<FixedOffset>,
    ) -> Self {
        Self {
            id,
            title: event.title.clone(),
            start: event.start,
            end: event.end,
            attendee: event.intent.attendee.clone(),
            description: event.intent.description.clone(),
            external_id: None,
            created_at,
        }
    }

    /// Half-open overlap test against `[start, end)`.
    pub fn overlaps(&self, start: &DateTime<FixedOffset>, end: &DateTime<FixedOffset>) -> bool {
        self.start < *end && *start < self.end
    }
}

/// Newtype over an IANA zone so configuration errors surface at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Zone(pub Tz);

impl FromStr for Zone {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Tz>()
            .map(Zone)
            .map_err(|_| ModelError::UnknownTimezone(s.to_string()))
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.name())
    }
}

impl Serialize for Zone {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.0.name())
    }
}

impl<'de> Deserialize<'de> for Zone {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The "now" and zone every relative expression resolves against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceClock {
    pub now: DateTime<Tz>,
    pub timezone: Zone,
}

impl ReferenceClock {
    pub fn new<Z: TimeZone>(now: DateTime<Z>, timezone: Zone) -> Self {
        Self {
            now: now.with_timezone(&timezone.0),
            timezone,
        }
    }

    pub fn system(timezone: Zone) -> Self {
        Self::new(chrono::Utc::now(), timezone)
    }

    /// Parses an RFC 3339 instant and zone name.
    pub fn parse(now: &str, timezone: &str) -> Result<Self, ModelError> {
        let zone: Zone = timezone.parse()?;
        let instant = DateTime::parse_from_rfc3339(now)
            .map_err(|e| ModelError::InvalidInstant(format!("{now}: {e}")))?;
        Ok(Self::new(instant, zone))
    }

    pub fn today(&self) -> NaiveDate {
        self.now.date_naive()
    }

    pub fn now_fixed(&self) -> DateTime<FixedOffset> {
        self.now.fixed_offset()
    }
}

/// RFC 3339 with whole seconds and a numeric offset, e.g. `2025-01-21T14:00:00-07:00`.
pub fn format_instant(t: &DateTime<FixedOffset>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, false)
}

pub(crate) mod rfc3339 {
    use chrono::{DateTime, FixedOffset};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<FixedOffset>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_instant(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<FixedOffset>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw).map_err(serde::de::Error::custom)
    }
}
