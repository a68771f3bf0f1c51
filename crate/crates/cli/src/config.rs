//! Optional TOML configuration and the tunable flags that override it.

use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;

use triples_core::gateway::RemoteConfig;
use triples_core::pipeline::{PipelineConfig, UpdateMode};

/// Contents of a `--config` file. Every key is optional.
///
/// ```toml
/// [pipeline]
/// k = 3
/// update_mode = "append_delete"
///
/// [remote]
/// endpoint = "http://localhost:8000"
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: PipelineConfig,
    pub remote: RemoteConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct TunableFlags {
    /// Demonstrations retrieved per minimal task [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Success threshold on the summed positional error [default: 0.03]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Similarity above which append_delete removes an older demonstration [default: 0.9]
    #[arg(long)]
    pub theta: Option<f64>,
    /// Compiler-feedback retries per minimal task [default: 3]
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Update passes before the frozen evaluation pass [default: 0]
    #[arg(long)]
    pub epochs: Option<u32>,
    /// none | append | append_delete [default: none]
    #[arg(long)]
    pub update: Option<UpdateMode>,
}

impl TunableFlags {
    pub fn apply(&self, mut cfg: PipelineConfig) -> PipelineConfig {
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.theta {
            cfg.theta_dup = v;
        }
        if let Some(v) = self.max_retries {
            cfg.max_retries = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.update {
            cfg.update_mode = v;
        }
        cfg
    }
}
