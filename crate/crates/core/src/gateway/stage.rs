//! The per-session stage protocol streamed to monitors.
//!
//! ```text
//! received -> [transcribed] -> ignored
//!                           -> triggered -> extracted -> resolved -> created
//!                                                                 -> pending_confirmation -> created | cancelled
//! any non-terminal stage -> failed
//! ```

use std::fmt;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Received,
    Ignored,
    Transcribed,
    Triggered,
    Extracted,
    Resolved,
    PendingConfirmation,
    Created,
    Cancelled,
    Failed,
}

impl Stage {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            Stage::Created | Stage::Ignored | Stage::Cancelled | Stage::Failed
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Received => "received",
            Stage::Ignored => "ignored",
            Stage::Transcribed => "transcribed",
            Stage::Triggered => "triggered",
            Stage::Extracted => "extracted",
            Stage::Resolved => "resolved",
            Stage::PendingConfirmation => "pending_confirmation",
            Stage::Created => "created",
            Stage::Cancelled => "cancelled",
            Stage::Failed => "failed",
        }
    }

    /// Whether `next` may directly follow `self`.
    pub fn may_precede(self, next: Stage) -> bool {
        use Stage::*;
        if next == Failed {
            return !self.is_terminal();
        }
        matches!(
            (self, next),
            (Received, Transcribed | Triggered | Ignored)
                | (Transcribed, Triggered | Ignored)
                | (Triggered, Extracted)
                | (Extracted, Resolved)
                | (Resolved, PendingConfirmation | Created)
                | (PendingConfirmation, Created | Cancelled)
        )
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One pipeline-progress message. Wire form is exactly
/// `{"session_id","seq","stage","payload","at"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEvent {
    pub session_id: String,
    pub seq: u64,
    pub stage: Stage,
    pub payload: Value,
    #[serde(with = "crate::model::rfc3339")]
    pub at: DateTime<FixedOffset>,
}

impl StageEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("stage event serializes")
    }
}

/// Checks a complete session: starts at `received`, follows the state
/// machine, ends on a terminal stage, and `seq` runs 1, 2, 3, ... for one
/// session id.
pub fn check_session(events: &[StageEvent]) -> Result<(), String> {
    let first = events.first().ok_or("empty session")?;
    if first.stage != Stage::Received {
        return Err(format!("session starts with {}", first.stage));
    }
    for (i, e) in events.iter().enumerate() {
        if e.session_id != first.session_id {
            return Err(format!("mixed sessions at index {i}"));
        }
        if e.seq != i as u64 + 1 {
            return Err(format!("seq {} at index {i}", e.seq));
        }
    }
    for w in events.windows(2) {
        if !w[0].stage.may_precede(w[1].stage) {
            return Err(format!(
                "illegal transition {} -> {}",
                w[0].stage, w[1].stage
            ));
        }
    }
    let last = events.last().expect("non-empty");
    if !last.stage.is_terminal() {
        return Err(format!("session ends on non-terminal {}", last.stage));
    }
    Ok(())
}
