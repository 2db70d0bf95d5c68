//! Local event store, conflict detection and best-effort provider sync.
//!
//! All intervals are half-open `[start, end)`: back-to-back appointments do
//! not conflict.

mod provider;
mod store;

pub use provider::{
    event_body, sync_external, ProviderClient, ProviderConfig, DEFAULT_PROVIDER_TIMEOUT_MS,
    IDEMPOTENCY_HEADER,
};
pub use store::{AtomicFileSink, CalendarStore, StoreSink, STORE_VERSION};
