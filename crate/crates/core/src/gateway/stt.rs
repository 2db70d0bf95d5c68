//! Speech-to-text backends. Audio is 16-bit PCM WAV.

use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::Duration;

use async_trait::async_trait;
use base64::Engine;
use chrono::Utc;
use serde_json::{json, Value};

use crate::error::SttError;
use crate::model::{Transcript, TranscriptSource};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    pub bytes: Vec<u8>,
    /// Where the audio was read from, when it came from a file.
    pub path: Option<PathBuf>,
}

impl AudioClip {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self { bytes, path: None }
    }

    pub fn from_file(path: impl Into<PathBuf>) -> Result<Self, SttError> {
        let path = path.into();
        let bytes = std::fs::read(&path)
            .map_err(|e| SttError::UnreadableAudio(format!("{}: {e}", path.display())))?;
        Ok(Self {
            bytes,
            path: Some(path),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub channels: u16,
    pub frames: u32,
}

/// Checks that `bytes` is a 16-bit integer PCM WAV file.
pub fn inspect_wav(bytes: &[u8]) -> Result<WavInfo, SttError> {
    if bytes.is_empty() {
        return Err(SttError::UnreadableAudio("empty audio".into()));
    }
    let reader = hound::WavReader::new(Cursor::new(bytes))
        .map_err(|e| SttError::UnreadableAudio(e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(SttError::UnreadableAudio(format!(
            "expected 16-bit PCM, got {}-bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    Ok(WavInfo {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        frames: reader.duration(),
    })
}

#[async_trait]
pub trait SttBackend: Send + Sync {
    fn source(&self) -> TranscriptSource;

    async fn recognize(&self, clip: &AudioClip, info: &WavInfo) -> Result<String, SttError>;
}

/// Validates the audio, runs the backend and stamps the transcript.
pub async fn transcribe(
    clip: &AudioClip,
    backend: &dyn SttBackend,
) -> Result<Transcript, SttError> {
    let info = inspect_wav(&clip.bytes)?;
    let text = backend.recognize(clip, &info).await?;
    Ok(Transcript {
        text,
        source: backend.source(),
        captured_at: Utc::now().fixed_offset(),
    })
}

/// Reads the transcript from a sidecar `.txt` next to the audio file.
#[derive(Debug, Clone, Default)]
pub struct MockStt {
    /// Searched for a byte-identical `.wav` when the clip has no path.
    pub fixture_dir: Option<PathBuf>,
}

fn sidecar_for(path: &Path) -> PathBuf {
    path.with_extension("txt")
}

impl MockStt {
    fn find_fixture(&self, bytes: &[u8]) -> Option<PathBuf> {
        let dir = self.fixture_dir.as_ref()?;
        let mut wavs: Vec<PathBuf> = std::fs::read_dir(dir)
            .ok()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        wavs.sort();
        wavs.into_iter()
            .find(|p| std::fs::read(p).is_ok_and(|b| b == bytes))
    }
}

#[async_trait]
impl SttBackend for MockStt {
    fn source(&self) -> TranscriptSource {
        TranscriptSource::Mock
    }

    async fn recognize(&self, clip: &AudioClip, _info: &WavInfo) -> Result<String, SttError> {
        let audio_path = match &clip.path {
            Some(p) => p.clone(),
            None => self
                .find_fixture(&clip.bytes)
                .ok_or_else(|| SttError::MissingTranscript("uploaded audio".into()))?,
        };
        let sidecar = sidecar_for(&audio_path);
        std::fs::read_to_string(&sidecar)
            .map(|t| t.trim().to_string())
            .map_err(|_| SttError::MissingTranscript(sidecar.display().to_string()))
    }
}

/// Google-style `speech:recognize` REST client.
pub struct CloudStt {
    endpoint: String,
    api_key: String,
    language_code: String,
    timeout_ms: u64,
    client: reqwest::Client,
}

impl CloudStt {
    pub fn new(
        endpoint: &str,
        api_key: &str,
        language_code: &str,
        timeout_ms: u64,
    ) -> Result<Self, SttError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| SttError::Service(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            api_key: api_key.to_string(),
            language_code: language_code.to_string(),
            timeout_ms,
            client,
        })
    }
}

/// Concatenates the top alternative of every result.
pub fn top_transcript(response: &Value) -> String {
    response
        .get("results")
        .and_then(Value::as_array)
        .map(|results| {
            results
                .iter()
                .filter_map(|r| {
                    r.pointer("/alternatives/0/transcript")
                        .and_then(Value::as_str)
                })
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default()
}

#[async_trait]
impl SttBackend for CloudStt {
    fn source(&self) -> TranscriptSource {
        TranscriptSource::Cloud
    }

    async fn recognize(&self, clip: &AudioClip, info: &WavInfo) -> Result<String, SttError> {
        let body = json!({
            "config": {
                "encoding": "LINEAR16",
                "sampleRateHertz": info.sample_rate,
                "audioChannelCount": info.channels,
                "languageCode": self.language_code,
            },
            "audio": {"content": base64::engine::general_purpose::STANDARD.encode(&clip.bytes)},
        });
        let mut url =
            url::Url::parse(&self.endpoint).map_err(|e| SttError::Service(e.to_string()))?;
        if !self.api_key.is_empty() {
            url.query_pairs_mut().append_pair("key", &self.api_key);
        }
        let req = self.client.post(url).json(&body);
        let timeout_ms = self.timeout_ms;
        let map_err = |e: reqwest::Error| {
            if e.is_timeout() {
                SttError::Timeout(timeout_ms)
            } else {
                SttError::Service(e.to_string())
            }
        };
        let resp = req.send().await.map_err(map_err)?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().await.unwrap_or_default();
            return Err(SttError::Service(format!(
                "HTTP {}: {text}",
                status.as_u16()
            )));
        }
        let value: Value = resp.json().await.map_err(map_err)?;
        Ok(top_transcript(&value))
    }
}
