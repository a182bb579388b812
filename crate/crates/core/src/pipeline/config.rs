//! Experiment configuration: the victim roster, demonstration budgets, and
//! per-stage settings, loadable from a TOML file with CLI overrides applied
//! on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::AdversaryConfig;
use crate::dqfd::DqfdConfig;
use crate::dqn::DqnConfig;
use crate::transfer::FgsmConfig;

use super::PipelineError;

/// One victim: id, network shape, and its training seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VictimSpec {
    pub id: String,
    pub layer_sizes: Vec<usize>,
    pub seed: u64,
}

/// CRoP sweep settings. The sweep runs against a single victim; every sweep
/// point shares its stage seeds so the omega = 0 row is the undefended
/// baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSettings {
    pub sweep: Vec<f64>,
    pub victim: String,
    pub demo_count: usize,
    pub return_episodes: usize,
    pub transfer_episodes: usize,
    pub agreement_states: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub victim_episodes: usize,
    pub attack_episodes: usize,
    pub transfer_episodes: usize,
}

/// Full experiment description. The `victim_dqn`, `dqfd`, and `adversary`
/// blocks are templates: their network seeds and stage seeds are derived
/// from `master_seed` and the cell id at run time, so the values of those
/// two fields in a config file are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub victims: Vec<VictimSpec>,
    pub demo_counts: Vec<usize>,
    pub victim_dqn: DqnConfig,
    pub dqfd: DqfdConfig,
    pub adversary: AdversaryConfig,
    pub fgsm: FgsmConfig,
    pub crop: CropSettings,
    pub eval: EvalSettings,
}

impl ExperimentConfig {
    /// Defaults with the published DQfD hyperparameters pre-filled (5000
    /// pre-training steps, margin 0.8, imitation coefficient 1, target
    /// update 1000, n = 10, gamma = 0.99) and three DQN victims of distinct
    /// seeds and architectures.
    pub fn paper_defaults(output_dir: PathBuf) -> Self {
        Self {
            master_seed: 7,
            output_dir,
            victims: vec![
                VictimSpec { id: "dqn-a".into(), layer_sizes: vec![4, 64, 64, 2], seed: 101 },
                VictimSpec { id: "dqn-b".into(), layer_sizes: vec![4, 32, 32, 2], seed: 303 },
                VictimSpec { id: "dqn-c".into(), layer_sizes: vec![4, 128, 2], seed: 202 },
            ],
            demo_counts: vec![5000, 2500, 1000],
            victim_dqn: DqnConfig::cartpole(vec![4, 64, 64, 2], 0),
            dqfd: DqfdConfig::table_defaults(vec![4, 64, 64, 2], 0),
            adversary: AdversaryConfig::cartpole(0),
            fgsm: FgsmConfig::default(),
            crop: CropSettings {
                sweep: vec![0.0, 0.05, 0.1, 0.25, 0.5],
                victim: "dqn-a".into(),
                demo_count: 5000,
                return_episodes: 100,
                transfer_episodes: 20,
                agreement_states: 1000,
            },
            eval: EvalSettings {
                victim_episodes: 100,
                attack_episodes: 100,
                transfer_episodes: 100,
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| PipelineError::Toml(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    /// SHA-256 of the canonical TOML serialization; stable under
    /// re-serialization.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.victims.is_empty() {
            return Err(PipelineError::Config("victim roster is empty".into()));
        }
        let mut ids: Vec<&str> = self.victims.iter().map(|v| v.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.victims.len() {
            return Err(PipelineError::Config("duplicate victim ids".into()));
        }
        if self.victims.iter().any(|v| v.id.contains(['/', ',', '\n'])) {
            return Err(PipelineError::Config("victim ids must be path- and csv-safe".into()));
        }
        if self.demo_counts.is_empty() || self.demo_counts.iter().any(|&n| n == 0) {
            return Err(PipelineError::Config("demo counts must be positive".into()));
        }
        self.victim_dqn.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.dqfd.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.adversary.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.fgsm.validate();
        if self.crop.sweep.is_empty() {
            return Err(PipelineError::Config("crop sweep is empty".into()));
        }
        if self.victim(&self.crop.victim).is_none() {
            return Err(PipelineError::UnknownVictim(self.crop.victim.clone()));
        }
        if self.eval.victim_episodes == 0
            || self.eval.attack_episodes == 0
            || self.eval.transfer_episodes == 0
        {
            return Err(PipelineError::Config("evaluation episode counts must be positive".into()));
        }
        Ok(())
    }

    pub fn victim(&self, id: &str) -> Option<&VictimSpec> {
        self.victims.iter().find(|v| v.id == id)
    }
}
