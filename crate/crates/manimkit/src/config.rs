//! `RunConfig`: one JSON document holding every tunable of a run.

use std::path::{Path, PathBuf};

use manimkit_core::agent::{AgentConfig, PromptTemplates};
use manimkit_core::codemetrics::CodeMetricsConfig;
use manimkit_core::grpo::GrpoHyperparams;
use manimkit_core::reward::RewardWeights;
use manimkit_core::video::VisualConfig;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, KitError, KitResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Deterministic feature hashing, no network.
    #[default]
    Hashed,
    Http,
}

/// An embedding provider. `dim` applies to the hashed kind; `url` and the
/// rest to the HTTP kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: ProviderKind,
    pub dim: Option<usize>,
    pub url: String,
    pub model: Option<String>,
    pub batch_size: usize,
    #[serde(flatten)]
    pub http: HttpSettings,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Hashed,
            dim: None,
            url: String::new(),
            model: None,
            batch_size: 32,
            http: HttpSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    /// Name of the environment variable holding a bearer token.
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self { api_key_env: None, timeout_secs: 120.0, retries: 3, backoff_ms: 500 }
    }
}

/// How the Manim child process is invoked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RendererConfig {
    pub executable: String,
    pub subcommand: String,
    pub media_dir_flag: String,
    /// Inserted before the scene file.
    pub extra_args: Vec<String>,
    /// Extension of the video file searched for under the media directory.
    pub video_extension: String,
    /// Address-space limit for the child, in MiB.
    pub memory_limit_mb: Option<u64>,
}

impl Default for RendererConfig {
    fn default() -> Self {
        Self {
            executable: "manim".into(),
            subcommand: "render".into(),
            media_dir_flag: "--media_dir".into(),
            extra_args: vec!["--progress_bar".into(), "none".into()],
            video_extension: "mp4".into(),
            memory_limit_mb: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub executable: String,
    /// Frames are scaled to this size while decoding; `None` keeps the source size.
    pub width: Option<usize>,
    pub height: Option<usize>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { executable: "ffmpeg".into(), width: Some(320), height: Some(180) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub agent: AgentConfig,
    /// Template file with `[system]`, `[initial]`, `[ritl]`, `[ritl_doc]`
    /// sections; overrides `agent.templates` when set. Relative paths
    /// resolve against the config file.
    pub templates_file: Option<PathBuf>,
    pub chat: HttpSettings,
    pub reward: RewardWeights,
    pub code_metrics: CodeMetricsConfig,
    pub visual: VisualConfig,
    pub grpo: GrpoHyperparams,
    pub code_embedder: EmbedderConfig,
    pub image_embedder: EmbedderConfig,
    pub renderer: RendererConfig,
    pub decoder: DecoderConfig,
    pub kb_path: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Records evaluated, and references rendered, at once.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            agent: AgentConfig::default(),
            templates_file: None,
            chat: HttpSettings { api_key_env: Some("MANIMKIT_API_KEY".into()), ..HttpSettings::default() },
            reward: RewardWeights::default(),
            code_metrics: CodeMetricsConfig::default(),
            visual: VisualConfig::default(),
            grpo: GrpoHyperparams::default(),
            code_embedder: EmbedderConfig::default(),
            image_embedder: EmbedderConfig::default(),
            renderer: RendererConfig::default(),
            decoder: DecoderConfig::default(),
            kb_path: None,
            cache_dir: PathBuf::from(".manimkit/cache"),
            output_dir: PathBuf::from(".manimkit/out"),
            workers: 4,
        }
    }
}

impl RunConfig {
    /// Reads a config file, loads its template file if any, and validates.
    pub fn load(path: &Path) -> KitResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &cfg.templates_file {
            let t = base.join(t);
            let body = std::fs::read_to_string(&t).map_err(io_err(&t))?;
            cfg.agent.templates = PromptTemplates::parse(&body)?;
        }
        for p in [&mut cfg.kb_path].into_iter().flatten() {
            *p = base.join(&*p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> KitResult<()> {
        self.agent.validate()?;
        self.reward.validate()?;
        self.code_metrics.validate()?;
        self.visual.validate()?;
        self.grpo.validate()?;
        let bad = |m: &str| Err(KitError::Core(manimkit_core::Error::Config(m.into())));
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if self.decoder.width.is_some() != self.decoder.height.is_some() || self.decoder.width == Some(0) || self.decoder.height == Some(0) {
            return bad("decoder width and height must both be set and positive, or both absent");
        }
        for e in [&self.code_embedder, &self.image_embedder] {
            if e.kind == ProviderKind::Http && e.url.is_empty() {
                return bad("an http embedder needs a url");
            }
            if e.batch_size == 0 || e.dim == Some(0) {
                return bad("embedder batch_size and dim must be positive");
            }
        }
        for h in [&self.chat, &self.code_embedder.http, &self.image_embedder.http] {
            if !(h.timeout_secs > 0.0) {
                return bad("http timeouts must be positive");
            }
        }
        Ok(())
    }
}
