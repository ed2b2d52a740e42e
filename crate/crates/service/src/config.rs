use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_ENV: &str = "PANACEA_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    pub nlisan: Option<PathBuf>,
    pub bigcn: Option<PathBuf>,
}

/// External NLI process. Without a command the built-in lexical provider is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NliSection {
    pub command: Option<String>,
    pub args: Vec<String>,
    pub timeout_ms: u64,
}

impl Default for NliSection {
    fn default() -> Self {
        NliSection { command: None, args: Vec::new(), timeout_ms: 5000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Propagation trees retrieved per rumour query.
    pub tree_k: usize,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection { n1: 100, n2: 10, n3: 3, tree_k: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    pub topics: usize,
    pub lda_iterations: usize,
    pub seed: u64,
    pub word_cloud_size: usize,
}

impl Default for PanelSection {
    fn default() -> Self {
        PanelSection { topics: 5, lda_iterations: 500, seed: 0, word_cloud_size: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub bind: String,
    pub slots: usize,
    pub ttl_seconds: u64,
    pub queue_bound: usize,
    pub encoder_dim: usize,
    /// Seed for models initialised when no checkpoint is configured.
    pub model_seed: u64,
    /// Trees with rumour probability at or above this are labelled Rumour.
    pub rumour_threshold: f64,
    /// Required in `x-admin-token` for admin endpoints; admin is disabled when unset.
    pub admin_token: Option<String>,
    pub models: ModelPaths,
    pub nli: NliSection,
    pub retrieval: RetrievalSection,
    pub panels: PanelSection,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("data"),
            bind: "127.0.0.1:8080".to_string(),
            slots: 1,
            ttl_seconds: 3600,
            queue_bound: 1000,
            encoder_dim: 256,
            model_seed: 0,
            rumour_threshold: 0.5,
            admin_token: None,
            models: ModelPaths::default(),
            nli: NliSection::default(),
            retrieval: RetrievalSection::default(),
            panels: PanelSection::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ServiceConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// The file named by `explicit`, else by `PANACEA_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(PathBuf::from(p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.slots == 0 {
            return bad("slots must be at least 1");
        }
        if self.queue_bound == 0 {
            return bad("queue_bound must be at least 1");
        }
        if self.encoder_dim == 0 {
            return bad("encoder_dim must be positive");
        }
        if self.ttl_seconds == 0 {
            return bad("ttl_seconds must be positive");
        }
        if !(0.0..=1.0).contains(&self.rumour_threshold) {
            return bad("rumour_threshold must lie in [0, 1]");
        }
        let r = &self.retrieval;
        if r.n1 == 0 || r.n2 == 0 || r.n3 == 0 || r.tree_k == 0 {
            return bad("retrieval depths must be positive");
        }
        if self.panels.topics == 0 {
            return bad("panels.topics must be positive");
        }
        if self.bind.parse::<std::net::SocketAddr>().is_err() {
            return Err(ConfigError::Invalid(format!("bind is not a socket address: {}", self.bind)));
        }
        Ok(())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.data_dir.join("result_cache.json")
    }

    pub fn precomputed_path(&self) -> PathBuf {
        self.data_dir.join("precomputed.jsonl")
    }
}
