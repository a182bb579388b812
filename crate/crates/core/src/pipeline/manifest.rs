//! Run manifest: per-stage status and wall-clock, artifact paths, and the
//! config hash that ties them to a configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Completed,
    /// Outputs from a previous run with the same config hash were reused.
    Skipped,
    Failed,
    /// Not attempted because an upstream stage of the same cell failed.
    SkippedUpstreamFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub stages: BTreeMap<String, StageRecord>,
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        Self {
            config_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            stages: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| PipelineError::Toml(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let text = toml::to_string_pretty(self).map_err(|e| PipelineError::Toml(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn record(&mut self, key: &str, record: StageRecord) {
        self.stages.insert(key.to_string(), record);
    }

    pub fn stage_ok(&self, key: &str) -> bool {
        matches!(
            self.stages.get(key).map(|r| r.status),
            Some(StageStatus::Completed) | Some(StageStatus::Skipped)
        )
    }

    pub fn failed_stages(&self) -> Vec<&str> {
        self.stages
            .iter()
            .filter(|(_, r)| r.status == StageStatus::Failed)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn is_success(&self) -> bool {
        self.stages.values().all(|r| {
            matches!(r.status, StageStatus::Completed | StageStatus::Skipped)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut m = RunManifest::new("abc123".into());
        m.record("train-target/dqn-a", StageRecord {
            status: StageStatus::Completed,
            seconds: 12.5,
            error: None,
        });
        m.record("imitate/dqn-a/5000", StageRecord {
            status: StageStatus::Failed,
            seconds: 0.4,
            error: Some("diverged".into()),
        });
        m.artifacts.insert("victim/dqn-a".into(), "victims/dqn-a/checkpoint.bin".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.toml");
        m.save(&path).unwrap();
        let loaded = RunManifest::load(&path).unwrap();
        assert_eq!(m, loaded);
        assert!(!loaded.is_success());
        assert_eq!(loaded.failed_stages(), vec!["imitate/dqn-a/5000"]);
    }
}
