//! Run configuration: one TOML file plus `key.path=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augmentation::AugmentationConfig;
use crate::generators::RemoteConfig;
use crate::model::{DatasetFormat, LoadMode, LoadOptions};
use crate::sandbox::SandboxConfig;
use crate::scoring::ScoringConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key.path=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Detected from the path when unset.
    pub format: Option<DatasetFormat>,
    pub mode: LoadMode,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: PathBuf::new(),
            format: None,
            mode: LoadMode::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    #[default]
    Replay,
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Root of the replay layout (`tests_<i>/`, `code_<i>/`).
    pub replay_dir: Option<PathBuf>,
    pub remote: RemoteConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub checkpoint_format: DatasetFormat,
    pub dataset: DatasetConfig,
    pub generator: GeneratorConfig,
    pub sandbox: SandboxConfig,
    pub scoring: ScoringConfig,
    pub augmentation: AugmentationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            seed: 0,
            checkpoint_format: DatasetFormat::Jsonl,
            dataset: DatasetConfig::default(),
            generator: GeneratorConfig::default(),
            sandbox: SandboxConfig::default(),
            scoring: ScoringConfig::default(),
            augmentation: AugmentationConfig::default(),
        }
    }
}

/// Sets `a.b.c = value` inside a TOML table, creating tables as needed.
/// The value is parsed as a TOML literal, falling back to a bare string.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let bad = || ConfigError::Override(spec.to_string());
    let (key, raw) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut table = root;
    for p in path {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(bad)?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// Reads `path` (or starts from defaults when `None`) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.augmentation.validate().map_err(|e| invalid(&e))?;
        self.scoring.validate().map_err(|e| invalid(&e))?;
        self.sandbox.runner.validate().map_err(|e| invalid(&e))?;
        self.sandbox.limits.validate().map_err(|e| invalid(&e))?;
        if self.sandbox.workers == 0 {
            return Err(ConfigError::Invalid("sandbox.workers must be at least 1".into()));
        }
        if self.generator.kind == GeneratorKind::Replay && self.generator.replay_dir.is_none() {
            return Err(ConfigError::Invalid("generator.replay_dir is required for the replay generator".into()));
        }
        let r = &self.generator.remote;
        if self.generator.kind == GeneratorKind::Remote {
            if r.endpoint.is_empty() {
                return Err(ConfigError::Invalid("generator.remote.endpoint is empty".into()));
            }
            if r.timeout_secs.is_nan() || r.timeout_secs <= 0.0 || r.max_in_flight == 0 {
                return Err(ConfigError::Invalid("remote timeout and max_in_flight must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            format: self.dataset.format,
            mode: self.dataset.mode,
            train_len_threshold: self.augmentation.train_len_threshold,
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty() {
        let c = RunConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.augmentation.test_iterations, 3);
        assert!(c.validate().is_err(), "replay generator without a directory");
    }

    #[test]
    fn overrides_nested_and_typed() {
        let text = "seed = 1\n[augmentation]\ntest_iterations = 2\n";
        let overrides = [
            "augmentation.test_iterations=1".to_string(),
            "augmentation.code_samples.competition = 7".into(),
            "generator.replay_dir=replays/run1".into(),
            "sandbox.limits.wall_time=2.5".into(),
            "sandbox.compare=numeric_tolerant".into(),
            "seed=9".into(),
        ];
        let c = RunConfig::from_toml_str(text, &overrides).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.augmentation.test_iterations, 1);
        assert_eq!(c.augmentation.code_samples.competition, 7);
        assert_eq!(c.generator.replay_dir.as_deref(), Some(Path::new("replays/run1")));
        assert_eq!(c.sandbox.limits.wall_time, std::time::Duration::from_millis(2500));
        assert_eq!(c.sandbox.compare, crate::sandbox::CompareMode::NumericTolerant);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(RunConfig::from_toml_str("", &["novalue".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(RunConfig::from_toml_str("", &["a..b=1".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(RunConfig::from_toml_str("seed = 1\n", &["seed.x=1".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(RunConfig::from_toml_str("bogus = 1\n", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::from_toml_str("seed = \"x\"\n", &[]), Err(ConfigError::Parse(_))));
        let zero = RunConfig::from_toml_str("", &["augmentation.code_iterations=0".into(), "generator.replay_dir=r".into()]).unwrap();
        assert!(matches!(zero.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.generator.replay_dir = Some("r".into());
        c.augmentation.extra_test_pass = true;
        let back = RunConfig::from_toml_str(&c.to_toml_string(), &[]).unwrap();
        assert_eq!(back, c);
    }
}
