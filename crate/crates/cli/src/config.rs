use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eegsync_core::io::{ReportFormat, SynthConfig};
use eegsync_core::pipeline::AnalysisConfig;

pub const RUN_CONFIG_VERSION: u32 = 1;

/// One analysis run, as read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub dataset: DatasetRef,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<ReportFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<usize>,
    /// Overrides the generator seed of a synthetic dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Where the recordings come from. Relative paths resolve against the
/// directory of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetRef {
    Manifest(PathBuf),
    SynthConfig(PathBuf),
    Synthetic(SynthConfig),
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: RUN_CONFIG_VERSION,
            dataset: DatasetRef::Synthetic(SynthConfig::default()),
            analysis: AnalysisConfig::default(),
            out: None,
            format: None,
            parallel: None,
            seed: None,
        }
    }
}

/// Why a config file could not be used.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: unsupported version {found} (expected {RUN_CONFIG_VERSION})")]
    Version { path: PathBuf, found: u32 },
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = read_json(path)?;
        if cfg.version != RUN_CONFIG_VERSION {
            return Err(ConfigError::Version {
                path: path.to_path_buf(),
                found: cfg.version,
            });
        }
        let base = path.parent().unwrap_or(Path::new(""));
        match &mut cfg.dataset {
            DatasetRef::Manifest(p) | DatasetRef::SynthConfig(p) if p.is_relative() => *p = base.join(&*p),
            _ => {}
        }
        if let Some(out) = &mut cfg.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"version": 1, "dataset": {"manifest": "m.json"}}"#).unwrap();
        assert_eq!(cfg.analysis, AnalysisConfig::default());
        assert_eq!(cfg.dataset, DatasetRef::Manifest("m.json".into()));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"version": 1, "dataset": {"manifest": "m.json"}, "extra": 1}"#,
            r#"{"version": 1, "dataset": {"manifest": "m.json"}, "analysis": {"alpah": 0.1}}"#,
            r#"{"version": 1, "dataset": {"archive": "m.json"}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(text).is_err(), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_config_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"version": 1, "dataset": {"manifest": "data/manifest.json"}, "out": "res"}"#,
        )
        .unwrap();
        let cfg = RunConfig::read(&path).unwrap();
        assert_eq!(cfg.dataset, DatasetRef::Manifest(dir.path().join("data/manifest.json")));
        assert_eq!(cfg.out, Some(dir.path().join("res")));
        fs::write(&path, r#"{"version": 2, "dataset": {"manifest": "m.json"}}"#).unwrap();
        assert!(matches!(
            RunConfig::read(&path),
            Err(ConfigError::Version { found: 2, .. })
        ));
    }
}
