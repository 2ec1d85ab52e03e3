//! The JSON run configuration and the suites it points at.
//!
//! Schema and endpoint paths are resolved relative to the config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use nirikshak_core::analysis::AnalysisParams;
use nirikshak_core::graph::DEFAULT_MAX_STEPS;
use nirikshak_core::runner::{ResourceSuite, RunConfig};
use nirikshak_core::{parse_endpoints, parse_resource_schema};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ResourceFiles {
    pub schema: PathBuf,
    pub endpoints: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HookCommands {
    pub setup: Option<String>,
    pub cleanup: Option<String>,
}

fn default_steps() -> usize {
    3
}
fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn default_iterations() -> usize {
    5
}
fn default_setup_instances() -> usize {
    10
}
fn default_timeout_ms() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CliConfig {
    pub base_url: String,
    pub resources: Vec<ResourceFiles>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_setup_instances")]
    pub setup_instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fail_fast: bool,
    #[serde(default = "default_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default)]
    pub hooks: HookCommands,
    #[serde(default)]
    pub analysis: AnalysisParams,
    /// Log path used when `--out` is not given.
    #[serde(default)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: &Path, message: impl ToString) -> Self {
        ConfigError {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}

/// A parsed config with its suites loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: CliConfig,
    pub suites: Vec<ResourceSuite>,
}

impl CliConfig {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            steps: self.steps,
            max_steps: self.max_steps,
            iterations: self.iterations,
            setup_instances: self.setup_instances,
            seed: self.seed,
            fail_fast: self.fail_fast,
        }
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_millis(self.request_timeout_ms)
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::at(path, e))
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let config: CliConfig = serde_json::from_str(&read(path)?).map_err(|e| ConfigError::at(path, e))?;
    config.analysis.validate().map_err(|e| ConfigError::at(path, format!("analysis: {e}")))?;
    if config.request_timeout_ms == 0 {
        return Err(ConfigError::at(path, "requestTimeoutMs must be positive"));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut suites = Vec::with_capacity(config.resources.len());
    for files in &config.resources {
        let schema_path = dir.join(&files.schema);
        let schema = parse_resource_schema(&read(&schema_path)?).map_err(|e| ConfigError::at(&schema_path, e))?;
        let endpoints_path = dir.join(&files.endpoints);
        let endpoints = parse_endpoints(&read(&endpoints_path)?, &schema).map_err(|e| ConfigError::at(&endpoints_path, e))?;
        if suites.iter().any(|s: &ResourceSuite| s.schema.name == schema.name) {
            return Err(ConfigError::at(&schema_path, format!("resource `{}` is listed twice", schema.name)));
        }
        suites.push(ResourceSuite { schema, endpoints });
    }
    Ok(LoadedConfig {
        path: path.to_owned(),
        config,
        suites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply() {
        let c: CliConfig = serde_json::from_str(r#"{"baseUrl": "http://x", "resources": []}"#).unwrap();
        assert_eq!((c.steps, c.iterations, c.setup_instances, c.request_timeout_ms), (3, 5, 10, 10_000));
        assert_eq!(c.analysis, AnalysisParams::default());
        assert_eq!(c.run_config().max_steps, 3);
    }

    #[test]
    fn missing_schema_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"baseUrl": "http://x", "resources": [{"schema": "nope.json", "endpoints": "e.json"}]}"#).unwrap();
        let err = load(&cfg).unwrap_err();
        assert!(err.path.ends_with("nope.json"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<CliConfig>(r#"{"baseUrl": "x", "resources": [], "stepz": 2}"#).is_err());
    }
}
