//! Pipeline configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta::MetaConfig;
use crate::sentinel::SentinelConfig;
use crate::specialists::SpecialistConfig;

pub const DEFAULT_SEED: u64 = 42;

/// Path of the taxonomy that ships with the crate.
pub const SHIPPED_TAXONOMY_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/taxonomy.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid {section} config: {message}")]
    Invalid { section: &'static str, message: String },
    #[error("reading config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl ConfigError {
    pub fn invalid(section: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            section,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub taxonomy: PathBuf,
    pub dataset_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            taxonomy: PathBuf::from(SHIPPED_TAXONOMY_PATH),
            dataset_dir: PathBuf::from("out/dataset"),
            report_dir: PathBuf::from("out/report"),
        }
    }
}

/// Everything a run needs. The defaults reproduce the reference run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sentinel: SentinelConfig,
    pub specialists: SpecialistConfig,
    pub meta: MetaConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub paths: Paths,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl PipelineConfig {
    pub fn reference() -> Self {
        Self {
            seed: DEFAULT_SEED,
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sentinel.validate()?;
        self.specialists.validate()?;
        self.meta.validate()?;
        let p = &self.paths;
        if [&p.taxonomy, &p.dataset_dir, &p.report_dir].iter().any(|p| p.as_os_str().is_empty()) {
            return Err(ConfigError::invalid("paths", "paths must be nonempty"));
        }
        Ok(())
    }
}
