//! Run configuration shared by the command-line and Python front ends.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::bands::{BandConfig, DEFAULT_GRID_POINTS, DEFAULT_REPLICAS};
use crate::error::{Error, Result};
use crate::estimator::{ModelSpec, WeatherSource};
use crate::ingest::{SeasonWindow, WeatherMeta};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeasonConfig {
    pub start: String,
    pub end: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_replicas() -> usize {
    DEFAULT_REPLICAS
}

fn default_level() -> f64 {
    0.95
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicas: DEFAULT_REPLICAS,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn band_config(&self) -> BandConfig {
        BandConfig {
            n_replicas: self.replicas,
            level: self.level,
            seed: self.seed,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Paths are relative to the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub yields: String,
    pub weather: Vec<WeatherSource>,
    pub output_dir: String,
    #[serde(default = "PathsConfig::default_model_file")]
    pub model_file: String,
}

impl PathsConfig {
    pub fn default_model_file() -> String {
        "model.json".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub crop: String,
    pub season: SeasonConfig,
    pub model: ModelSpec,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    pub paths: PathsConfig,
}

/// A parsed config together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn model_path(&self) -> PathBuf {
        self.resolve(&self.config.paths.output_dir)
            .join(&self.config.paths.model_file)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "config schema version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Reads, parses and validates a config file, including the existence
    /// and consistency of every referenced input.
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::MissingFile {
            path: path.display().to_string(),
            source: e,
        })?;
        let config = RunConfig::from_json(&text)?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let loaded = LoadedConfig { config, base_dir };
        loaded.config.validate(&loaded.base_dir)?;
        Ok(loaded)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        self.model.validate()?;
        let season = SeasonWindow::parse(&self.season.start, &self.season.end)?;
        let b = &self.bootstrap;
        if b.replicas < 2 {
            return Err(Error::Config("bootstrap needs at least 2 replicas".into()));
        }
        if !(b.level > 0.0 && b.level < 1.0) {
            return Err(Error::Config(format!("bootstrap level {} outside (0, 1)", b.level)));
        }
        let exists = |rel: &str| -> Result<PathBuf> {
            let p = base_dir.join(rel);
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::MissingFile {
                    path: p.display().to_string(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                })
            }
        };
        exists(&self.paths.yields)?;
        for c in &self.model.covariates {
            if !self.paths.weather.iter().any(|w| w.covariate == c.name) {
                return Err(Error::Config(format!("no weather files configured for covariate {}", c.name)));
            }
        }
        for w in &self.paths.weather {
            exists(&w.data)?;
            let meta = WeatherMeta::load(&exists(&w.meta)?)?;
            if meta.covariate != w.covariate {
                return Err(Error::Config(format!(
                    "sidecar {} describes covariate {}, config expects {}",
                    w.meta, meta.covariate, w.covariate
                )));
            }
            if meta.season()? != season {
                return Err(Error::Config(format!(
                    "sidecar {} season {}..{} differs from the configured season {}..{}",
                    w.meta, meta.season_start, meta.season_end, self.season.start, self.season.end
                )));
            }
        }
        Ok(())
    }
}
