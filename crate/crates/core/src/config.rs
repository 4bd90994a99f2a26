//! Application configuration: a TOML file merged with command-line
//! overrides. Precedence is defaults < file < flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::ChunkerConfig;
use crate::generation::GenerationConfig;
use crate::vectors::ProviderConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config value: {message}")]
    Invalid { message: String },
}

/// Which providers to use: real HTTP endpoints or the deterministic
/// built-in mocks (fully offline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProviderChoice {
    #[default]
    Remote,
    Mock,
}

impl ProviderChoice {
    fn parse(raw: &str) -> Result<Self, ConfigError> {
        match raw {
            "remote" => Ok(ProviderChoice::Remote),
            "mock" => Ok(ProviderChoice::Mock),
            other => Err(ConfigError::Invalid {
                message: format!("provider must be \"remote\" or \"mock\", got \"{other}\""),
            }),
        }
    }
}

/// Resolved embedding provider settings.
#[derive(Debug, Clone)]
pub struct EmbeddingSettings {
    pub endpoint_url: Option<String>,
    pub model: String,
    pub batch_size: usize,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        EmbeddingSettings {
            endpoint_url: None,
            model: "text-embedding-3-small".to_string(),
            batch_size: 16,
            timeout: Duration::from_secs(30),
            max_retries: 3,
        }
    }
}

impl EmbeddingSettings {
    pub fn provider_config(&self) -> ProviderConfig {
        ProviderConfig {
            kind: crate::vectors::ProviderKind::Remote,
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model.clone(),
            batch_size: self.batch_size,
            timeout: self.timeout,
            max_retries: self.max_retries,
        }
    }
}

/// Resolved chat provider settings.
#[derive(Debug, Clone)]
pub struct ChatSettings {
    pub endpoint_url: Option<String>,
    pub generation: GenerationConfig,
}

impl Default for ChatSettings {
    fn default() -> Self {
        ChatSettings { endpoint_url: None, generation: GenerationConfig::default() }
    }
}

/// Fully resolved application configuration.
#[derive(Debug, Clone)]
pub struct AppConfig {
    pub provider: ProviderChoice,
    pub k: usize,
    /// Embedding cache directory; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub reading_wpm: f64,
    pub parallelism: usize,
    pub embedding: EmbeddingSettings,
    pub chat: ChatSettings,
    pub chunker: ChunkerConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            provider: ProviderChoice::default(),
            k: 2,
            cache_dir: None,
            out_dir: PathBuf::from("reports"),
            reading_wpm: crate::eval::DEFAULT_READING_WPM,
            parallelism: 4,
            embedding: EmbeddingSettings::default(),
            chat: ChatSettings::default(),
            chunker: ChunkerConfig::default(),
        }
    }
}

/// The on-disk TOML shape. Every field is optional; unknown keys are
/// rejected with the offending key named.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub provider: Option<String>,
    pub k: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub reading_wpm: Option<f64>,
    pub parallelism: Option<usize>,
    pub embedding: Option<EmbeddingSection>,
    pub chat: Option<ChatSection>,
    pub chunker: Option<ChunkerSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub endpoint_url: Option<String>,
    pub model: Option<String>,
    pub batch_size: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatSection {
    pub endpoint_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkerSection {
    pub chunk_size_tokens: Option<usize>,
    pub overlap_tokens: Option<usize>,
}

/// Command-line overrides, applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub provider: Option<ProviderChoice>,
    pub k: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub reading_wpm: Option<f64>,
    pub chunk_size_tokens: Option<usize>,
    pub overlap_tokens: Option<usize>,
    pub embedding_model: Option<String>,
    pub chat_model: Option<String>,
}

pub fn load_config_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    toml::from_str(&raw)
        .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

impl AppConfig {
    /// Merge defaults, an optional config file, and flag overrides, then
    /// validate the result.
    pub fn resolve(
        file: Option<ConfigFile>,
        overrides: &ConfigOverrides,
    ) -> Result<AppConfig, ConfigError> {
        let mut cfg = AppConfig::default();
        if let Some(file) = file {
            if let Some(raw) = file.provider {
                cfg.provider = ProviderChoice::parse(&raw)?;
            }
            if let Some(k) = file.k {
                cfg.k = k;
            }
            if let Some(dir) = file.cache_dir {
                cfg.cache_dir = Some(dir);
            }
            if let Some(dir) = file.out_dir {
                cfg.out_dir = dir;
            }
            if let Some(wpm) = file.reading_wpm {
                cfg.reading_wpm = wpm;
            }
            if let Some(p) = file.parallelism {
                cfg.parallelism = p;
            }
            if let Some(section) = file.embedding {
                if let Some(url) = section.endpoint_url {
                    cfg.embedding.endpoint_url = Some(url);
                }
                if let Some(model) = section.model {
                    cfg.embedding.model = model;
                }
                if let Some(n) = section.batch_size {
                    cfg.embedding.batch_size = n;
                }
                if let Some(secs) = section.timeout_secs {
                    cfg.embedding.timeout = Duration::from_secs(secs);
                }
                if let Some(n) = section.max_retries {
                    cfg.embedding.max_retries = n;
                }
            }
            if let Some(section) = file.chat {
                if let Some(url) = section.endpoint_url {
                    cfg.chat.endpoint_url = Some(url);
                }
                if let Some(model) = section.model {
                    cfg.chat.generation.model_name = model;
                }
                if let Some(t) = section.temperature {
                    cfg.chat.generation.temperature = t;
                }
                if let Some(n) = section.max_output_tokens {
                    cfg.chat.generation.max_output_tokens = n;
                }
                if let Some(secs) = section.timeout_secs {
                    cfg.chat.generation.timeout = Duration::from_secs(secs);
                }
                if let Some(n) = section.max_retries {
                    cfg.chat.generation.max_retries = n;
                }
            }
            if let Some(section) = file.chunker {
                if let Some(n) = section.chunk_size_tokens {
                    cfg.chunker.chunk_size_tokens = n;
                }
                if let Some(n) = section.overlap_tokens {
                    cfg.chunker.overlap_tokens = n;
                }
            }
        }
        if let Some(p) = overrides.provider {
            cfg.provider = p;
        }
        if let Some(k) = overrides.k {
            cfg.k = k;
        }
        if let Some(dir) = &overrides.cache_dir {
            cfg.cache_dir = Some(dir.clone());
        }
        if let Some(dir) = &overrides.out_dir {
            cfg.out_dir = dir.clone();
        }
        if let Some(wpm) = overrides.reading_wpm {
            cfg.reading_wpm = wpm;
        }
        if let Some(n) = overrides.chunk_size_tokens {
            cfg.chunker.chunk_size_tokens = n;
        }
        if let Some(n) = overrides.overlap_tokens {
            cfg.chunker.overlap_tokens = n;
        }
        if let Some(model) = &overrides.embedding_model {
            cfg.embedding.model = model.clone();
        }
        if let Some(model) = &overrides.chat_model {
            cfg.chat.generation.model_name = model.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Invalid { message: "k must be at least 1".to_string() });
        }
        if !(self.reading_wpm > 0.0) || !self.reading_wpm.is_finite() {
            return Err(ConfigError::Invalid {
                message: format!("reading_wpm must be positive, got {}", self.reading_wpm),
            });
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid {
                message: "parallelism must be at least 1".to_string(),
            });
        }
        if self.embedding.batch_size == 0 {
            return Err(ConfigError::Invalid {
                message: "embedding.batch_size must be at least 1".to_string(),
            });
        }
        self.chunker.validate().map_err(|e| ConfigError::Invalid { message: e.to_string() })?;
        Ok(())
    }
}
