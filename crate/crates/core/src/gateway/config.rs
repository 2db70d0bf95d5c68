use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::calendar::ProviderConfig;
use crate::error::ConfigError;
use crate::model::{Zone, MAX_DURATION_MINUTES, MIN_DURATION_MINUTES};
use crate::temporal::{TimeOfDay, WindowDefaults, DEFAULT_DURATION_MINUTES, DEFAULT_START_MINUTES};
use crate::trigger::{KeywordSet, DEFAULT_KEYWORDS};

pub const ENV_LLM_API_KEY: &str = "MDWAIST_LLM_API_KEY";
pub const ENV_PROVIDER_TOKEN: &str = "MDWAIST_PROVIDER_TOKEN";

pub const DEFAULT_TIMEZONE: &str = "America/Phoenix";
pub const DEFAULT_LLM_TIMEOUT_MS: u64 = 15_000;
pub const DEFAULT_STT_TIMEOUT_MS: u64 = 10_000;
pub const DEFAULT_PENDING_TTL_MS: u64 = 120_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    /// Offline stand-in that is always unreachable, so extraction uses the
    /// rule-based parser.
    #[default]
    Mock,
    Live,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub mode: LlmMode,
    pub base_url: String,
    pub api_key: String,
    pub model_name: String,
    pub timeout_ms: u64,
    pub max_tokens: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            mode: LlmMode::Mock,
            base_url: "https://api.groq.com/openai/v1".into(),
            api_key: String::new(),
            model_name: "mixtral-8x7b-32768".into(),
            timeout_ms: DEFAULT_LLM_TIMEOUT_MS,
            max_tokens: crate::intent::DEFAULT_MAX_TOKENS,
        }
    }
}

impl std::fmt::Debug for LlmConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmConfig")
            .field("mode", &self.mode)
            .field("base_url", &self.base_url)
            .field("model_name", &self.model_name)
            .field("timeout_ms", &self.timeout_ms)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SttMode {
    #[default]
    Mock,
    Cloud,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SttConfig {
    pub mode: SttMode,
    pub endpoint: String,
    pub api_key: String,
    pub language_code: String,
    pub timeout_ms: u64,
    /// Directory of `<name>.wav` / `<name>.txt` fixture pairs for the mock
    /// backend when audio arrives without a file path.
    pub fixture_dir: Option<PathBuf>,
}

impl Default for SttConfig {
    fn default() -> Self {
        Self {
            mode: SttMode::Mock,
            endpoint: "https://speech.googleapis.com/v1/speech:recognize".into(),
            api_key: String::new(),
            language_code: "en-US".into(),
            timeout_ms: DEFAULT_STT_TIMEOUT_MS,
            fixture_dir: None,
        }
    }
}

impl std::fmt::Debug for SttConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SttConfig")
            .field("mode", &self.mode)
            .field("endpoint", &self.endpoint)
            .field("language_code", &self.language_code)
            .field("timeout_ms", &self.timeout_ms)
            .field("fixture_dir", &self.fixture_dir)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub timezone: String,
    pub trigger_keywords: Vec<String>,
    pub default_duration_minutes: u32,
    pub default_start_time: TimeOfDay,
    pub llm: LlmConfig,
    pub stt: SttConfig,
    pub provider: Option<ProviderConfig>,
    pub confirm_mode: bool,
    pub pending_ttl_ms: u64,
    /// Overrides the system clock for temporal resolution.
    pub fixed_now: Option<DateTime<FixedOffset>>,
    pub listen: String,
    pub store_path: PathBuf,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            timezone: DEFAULT_TIMEZONE.into(),
            trigger_keywords: DEFAULT_KEYWORDS.iter().map(|k| k.to_string()).collect(),
            default_duration_minutes: DEFAULT_DURATION_MINUTES,
            default_start_time: TimeOfDay::from_minutes(DEFAULT_START_MINUTES).expect("09:00"),
            llm: LlmConfig::default(),
            stt: SttConfig::default(),
            provider: None,
            confirm_mode: false,
            pending_ttl_ms: DEFAULT_PENDING_TTL_MS,
            fixed_now: None,
            listen: "127.0.0.1:8080".into(),
            store_path: PathBuf::from("calendar.json"),
        }
    }
}

impl GatewayConfig {
    /// Reads a JSON config file, applies environment secrets and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_json(&text)?;
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Secrets from the environment win over the file.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(key) = lookup(ENV_LLM_API_KEY).filter(|k| !k.is_empty()) {
            self.llm.api_key = key;
        }
        if let Some(token) = lookup(ENV_PROVIDER_TOKEN).filter(|k| !k.is_empty()) {
            if let Some(p) = self.provider.as_mut() {
                p.auth_token = token;
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.zone()?;
        if self.keywords().is_empty() {
            return invalid("trigger_keywords must not be empty".into());
        }
        if !(MIN_DURATION_MINUTES..=MAX_DURATION_MINUTES).contains(&self.default_duration_minutes) {
            return invalid(format!(
                "default_duration_minutes {} outside 1..=1440",
                self.default_duration_minutes
            ));
        }
        if let Some(p) = &self.provider {
            p.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.llm.mode == LlmMode::Live {
            url::Url::parse(&self.llm.base_url)
                .map_err(|e| ConfigError::Invalid(format!("llm.base_url: {e}")))?;
        }
        if self.stt.mode == SttMode::Cloud {
            url::Url::parse(&self.stt.endpoint)
                .map_err(|e| ConfigError::Invalid(format!("stt.endpoint: {e}")))?;
        }
        if let Some(dir) = &self.stt.fixture_dir {
            if !dir.is_dir() {
                return invalid(format!(
                    "stt.fixture_dir {} is not a directory",
                    dir.display()
                ));
            }
        }
        if self.pending_ttl_ms == 0 {
            return invalid("pending_ttl_ms must be positive".into());
        }
        Ok(())
    }

    pub fn zone(&self) -> Result<Zone, ConfigError> {
        self.timezone
            .parse()
            .map_err(|e: crate::error::ModelError| ConfigError::Invalid(e.to_string()))
    }

    pub fn keywords(&self) -> KeywordSet {
        KeywordSet::new(&self.trigger_keywords)
    }

    pub fn window_defaults(&self) -> WindowDefaults {
        WindowDefaults {
            default_duration_minutes: self.default_duration_minutes,
            default_start_time: self.default_start_time,
        }
    }
}
