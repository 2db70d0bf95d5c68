use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{DateTime, FixedOffset};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::sync::broadcast::error::RecvError;

use crate::error::{ConfigError, GatewayError};

use super::config::{GatewayConfig, LlmMode, SttMode};
use super::pipeline::{Gateway, UtteranceInput};
use super::server;
use super::stage::Stage;
use super::stt::AudioClip;

pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vsched",
    version,
    about = "Voice-to-calendar scheduling gateway"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP/SSE service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one utterance through the pipeline, printing each stage as a JSON line.
    Once(OnceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SttArg {
    Mock,
    Cloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LlmArg {
    Mock,
    Live,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["text", "audio"])))]
pub struct OnceArgs {
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long)]
    pub audio: Option<PathBuf>,
    /// Reference instant for relative dates, e.g. 2025-01-15T10:00:00-07:00.
    #[arg(long)]
    pub now: Option<DateTime<FixedOffset>>,
    #[arg(long, value_enum)]
    pub stt: Option<SttArg>,
    #[arg(long, value_enum)]
    pub llm: Option<LlmArg>,
    /// Hold the event for confirmation on stdin (y/N).
    #[arg(long)]
    pub confirm: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Calendar store file, overriding the config.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// IANA timezone, overriding the config.
    #[arg(long)]
    pub tz: Option<String>,
}

fn load_config(path: Option<&PathBuf>) -> Result<GatewayConfig, ConfigError> {
    match path {
        Some(p) => GatewayConfig::load(p),
        None => {
            let mut c = GatewayConfig::default();
            c.apply_env(|k| std::env::var(k).ok());
            Ok(c)
        }
    }
}

impl OnceArgs {
    pub fn to_config(&self) -> Result<GatewayConfig, ConfigError> {
        let mut config = load_config(self.config.as_ref())?;
        if let Some(now) = self.now {
            config.fixed_now = Some(now);
        }
        match self.stt {
            Some(SttArg::Mock) => config.stt.mode = SttMode::Mock,
            Some(SttArg::Cloud) => config.stt.mode = SttMode::Cloud,
            None => {}
        }
        match self.llm {
            Some(LlmArg::Mock) => config.llm.mode = LlmMode::Mock,
            Some(LlmArg::Live) => config.llm.mode = LlmMode::Live,
            None => {}
        }
        if self.confirm {
            config.confirm_mode = true;
        }
        if let Some(store) = &self.store {
            config.store_path = store.clone();
        }
        if let Some(tz) = &self.tz {
            config.timezone = tz.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn is_affirmative(line: &str) -> bool {
    matches!(line.trim().to_lowercase().as_str(), "y" | "yes" | "confirm")
}

/// Executes one pipeline pass. Exit 0 on created, ignored or cancelled; 1 on failed.
pub async fn run_once(args: OnceArgs) -> Result<ExitCode, GatewayError> {
    let config = args.to_config()?;
    let input = match (&args.text, &args.audio) {
        (Some(text), _) => UtteranceInput::Text(text.clone()),
        (None, Some(path)) => match AudioClip::from_file(path) {
            Ok(clip) => UtteranceInput::Audio(clip),
            // let the pipeline report unreadable audio as a failed stage
            Err(_) => UtteranceInput::Audio(AudioClip {
                bytes: Vec::new(),
                path: Some(path.clone()),
            }),
        },
        (None, None) => unreachable!("clap requires one input"),
    };

    let gateway = Arc::new(Gateway::from_config(config)?);
    let mut rx = gateway.subscribe();
    let session_id = Gateway::new_session_id();
    let runner = {
        let gateway = gateway.clone();
        let id = session_id.clone();
        tokio::spawn(async move { gateway.run(input, &id).await })
    };

    let mut stdout = tokio::io::stdout();
    let mut terminal = None;
    while terminal.is_none() {
        let event = match rx.recv().await {
            Ok(e) => e,
            Err(RecvError::Lagged(_)) => continue,
            Err(RecvError::Closed) => break,
        };
        if event.session_id != session_id {
            continue;
        }
        let mut line = event.to_json_line();
        line.push('\n');
        stdout.write_all(line.as_bytes()).await.ok();
        stdout.flush().await.ok();

        if event.stage == Stage::PendingConfirmation {
            let pending_id = event.payload["pending_id"]
                .as_str()
                .unwrap_or_default()
                .to_string();
            let title = event.payload["title"]
                .as_str()
                .unwrap_or_default()
                .to_string();
            let gateway = gateway.clone();
            tokio::spawn(async move {
                eprint!("Create \"{title}\"? [y/N] ");
                let mut line = String::new();
                let read = BufReader::new(tokio::io::stdin())
                    .read_line(&mut line)
                    .await;
                let confirmed = read.is_ok_and(|n| n > 0) && is_affirmative(&line);
                let result = if confirmed {
                    gateway.confirm(&pending_id).await
                } else {
                    gateway.cancel(&pending_id).await
                };
                if let Err(e) = result {
                    eprintln!("{e}");
                }
            });
        }
        if event.stage.is_terminal() {
            terminal = Some(event.stage);
        }
    }
    let terminal = match terminal {
        Some(stage) => stage,
        None => {
            runner
                .await
                .map_err(|e| GatewayError::Serve(e.to_string()))?
                .stage
        }
    };
    Ok(match terminal {
        Stage::Failed => ExitCode::from(EXIT_FAILED),
        _ => ExitCode::SUCCESS,
    })
}

pub async fn run_serve(config: Option<PathBuf>) -> Result<ExitCode, GatewayError> {
    let config = load_config(config.as_ref())?;
    config.validate()?;
    let gateway = Arc::new(Gateway::from_config(config)?);
    server::serve(gateway).await?;
    Ok(ExitCode::SUCCESS)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILED);
        }
    };
    let result = runtime.block_on(async {
        match cli.command {
            Command::Serve { config } => run_serve(config).await,
            Command::Once(args) => run_once(args).await,
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                GatewayError::Config(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_FAILED),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_once_flags() {
        let cli = Cli::try_parse_from([
            "vsched",
            "once",
            "--text",
            "Schedule a meeting",
            "--now",
            "2025-01-15T10:00:00-07:00",
            "--stt",
            "mock",
            "--llm",
            "mock",
            "--confirm",
        ])
        .unwrap();
        let Command::Once(args) = cli.command else {
            panic!()
        };
        assert_eq!(args.text.as_deref(), Some("Schedule a meeting"));
        assert!(args.confirm);
        assert_eq!(args.llm, Some(LlmArg::Mock));
        let config = args.to_config().unwrap();
        assert!(config.confirm_mode);
        assert_eq!(
            config.fixed_now.unwrap().to_rfc3339(),
            "2025-01-15T10:00:00-07:00"
        );
    }

    #[test]
    fn once_requires_exactly_one_input() {
        assert!(Cli::try_parse_from(["vsched", "once"]).is_err());
        assert!(
            Cli::try_parse_from(["vsched", "once", "--text", "a", "--audio", "b.wav"]).is_err()
        );
        assert!(
            Cli::try_parse_from(["vsched", "once", "--text", "a", "--now", "tuesday"]).is_err()
        );
    }

    #[test]
    fn affirmative_answers() {
        assert!(is_affirmative("y\n"));
        assert!(is_affirmative(" YES "));
        assert!(!is_affirmative(""));
        assert!(!is_affirmative("no"));
    }
}
