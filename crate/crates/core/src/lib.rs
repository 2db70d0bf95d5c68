//! Voice-to-calendar scheduling pipeline.
//!
//! A transcript passes keyword triggering ([`trigger`]), is turned into a
//! structured [`model::SchedulingIntent`] ([`intent`]), resolved against a
//! reference clock ([`temporal`]) and committed to a local store with
//! optional provider sync ([`calendar`]). [`gateway`] wires the stages
//! together and exposes the HTTP/SSE service and CLI.

pub mod calendar;
pub mod error;
pub mod gateway;
pub mod intent;
pub mod model;
pub mod temporal;
pub mod trigger;

pub use error::*;
pub use model::{
    derive_title, validate_intent, validate_intent_bytes, EventRecord, ReferenceClock,
    ResolvedEvent, SchedulingIntent, Transcript, TranscriptSource, Zone,
};
