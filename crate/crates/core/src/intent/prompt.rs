use chrono::Datelike;

use crate::model::{format_instant, ReferenceClock};

/// JSON Schema of the intent object the model must return.
pub const INTENT_JSON_SCHEMA: &str = r#"{
  "type": "object",
  "additionalProperties": false,
  "required": ["action", "attendee", "date_expression", "time_expression", "duration_minutes", "description"],
  "properties": {
    "action": {"const": "create_event"},
    "attendee": {"type": ["string", "null"]},
    "date_expression": {"type": ["string", "null"]},
    "time_expression": {"type": ["string", "null"]},
    "duration_minutes": {"type": ["integer", "null"], "minimum": 1, "maximum": 1440},
    "description": {"type": ["string", "null"]}
  }
}"#;

/// Builds the extraction prompt. Output depends only on the arguments.
pub fn build_prompt(transcript: &str, clock: &ReferenceClock) -> String {
    let now = clock.now;
    format!(
        "You extract calendar scheduling requests from a clinician's spoken command.\n\
         \n\
         Current time: {instant} ({zone}, {weekday})\n\
         \n\
         Reply with JSON only: a single object matching this schema, no prose, no code fences.\n\
         {schema}\n\
         \n\
         Field rules:\n\
         - action: always \"create_event\".\n\
         - attendee: the person the event is with, including any title such as \"Dr.\" or \"Mr.\", else null.\n\
         - date_expression: the date words as spoken (for example \"next Tuesday\", \"tomorrow\", \"on March 3\"), else null. Do not convert to a calendar date.\n\
         - time_expression: the time words as spoken (for example \"2\", \"9 am\", \"2:30 pm\", \"noon\"), else null.\n\
         - duration_minutes: the requested length in whole minutes, else null.\n\
         - description: the kind of event (for example \"follow-up\", \"meeting\") without articles, else null.\n\
         - Use null for anything not stated. Never invent values.\n\
         \n\
         Command:\n\
         {transcript}\n",
        instant = format_instant(&now.fixed_offset()),
        zone = clock.timezone,
        weekday = now.weekday(),
        schema = INTENT_JSON_SCHEMA,
        transcript = transcript,
    )
}
