//! Bounded repair of model replies: strip a markdown fence, then pull out the
//! first balanced JSON object.

use crate::error::ParseError;
use crate::model::{validate_intent, SchedulingIntent};

/// Contents of the first fenced block, or the input unchanged. The closing
/// fence must start a line; without one the block runs to the end.
pub fn strip_code_fences(raw: &str) -> &str {
    let Some(open) = raw.find("```") else {
        return raw;
    };
    let after_open = &raw[open + 3..];
    // skip the info string (e.g. "json") up to the end of the fence line
    let body_start = after_open.find('\n').map_or(after_open.len(), |i| i + 1);
    let body = &after_open[body_start..];
    let close = if body.starts_with("```") {
        Some(0)
    } else {
        body.find("\n```").map(|i| i + 1)
    };
    match close {
        Some(close) => &body[..close],
        None => body,
    }
}

/// End (exclusive) of the balanced block opening at `start`, treating
/// braces inside JSON strings as text.
fn matching_close(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, b) in text.bytes().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Balanced `{...}` blocks, one per opening brace, ordered by start.
pub fn balanced_objects(text: &str) -> Vec<(usize, usize)> {
    text.match_indices('{')
        .filter_map(|(s, _)| matching_close(text, s).map(|e| (s, e)))
        .collect()
}

fn first_parseable_object(text: &str) -> Option<&str> {
    balanced_objects(text)
        .into_iter()
        .map(|(s, e)| &text[s..e])
        .find(|candidate| {
            serde_json::from_str::<serde_json::Value>(candidate).is_ok_and(|v| v.is_object())
        })
}

/// First balanced block that parses as a JSON object; if none parse, the
/// first balanced block so validation can report why.
pub fn extract_json_object(text: &str) -> Option<&str> {
    first_parseable_object(text)
        .or_else(|| balanced_objects(text).first().map(|&(s, e)| &text[s..e]))
}

/// Turns a verbatim model reply into a validated intent.
pub fn parse_response(raw: &str) -> Result<SchedulingIntent, ParseError> {
    let unfenced = strip_code_fences(raw);
    let object = first_parseable_object(unfenced)
        .or_else(|| first_parseable_object(raw))
        .or_else(|| extract_json_object(unfenced))
        .or_else(|| extract_json_object(raw))
        .ok_or(ParseError::NoJsonObject)?;
    validate_intent(object).map_err(ParseError::Invalid)
}
