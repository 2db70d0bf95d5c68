//! Pipeline orchestration, speech-to-text backends, configuration, the
//! HTTP/SSE service and the command line.

pub mod cli;
mod config;
mod pipeline;
mod server;
mod stage;
mod stt;

pub use config::{
    GatewayConfig, LlmConfig, LlmMode, SttConfig, SttMode, DEFAULT_PENDING_TTL_MS,
    DEFAULT_TIMEZONE, ENV_LLM_API_KEY, ENV_PROVIDER_TOKEN,
};
pub use pipeline::{Backends, Gateway, UtteranceInput};
pub use server::{router, serve};
pub use stage::{check_session, Stage, StageEvent};
pub use stt::{
    inspect_wav, top_transcript, transcribe, AudioClip, CloudStt, MockStt, SttBackend, WavInfo,
};
