use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::SacConfig;
use crate::baseline::RbcSchedule;
use crate::env::{Dataset, EnvConfig, SyntheticParams};
use crate::error::{Error, Result};
use crate::reward::{Condition, ConditionId, Deadband, RewardWeights};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_SEEDS: [u64; 5] = [42, 0, 1, 123, 456];

/// Eight weeks of hourly rows.
pub const DESK_HORIZON: usize = 1344;
pub const DESK_STEPS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticParams),
    File { path: PathBuf },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticParams::default())
    }
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Synthetic(p) => Dataset::synthetic(p),
            DatasetSource::File { path } => Dataset::load(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Per-condition weight overrides, keyed by condition id.
    pub weights: BTreeMap<ConditionId, RewardWeights>,
    pub deadband: Deadband,
    /// Use the carbon channel for grid reward even where prices exist.
    pub force_carbon_fallback: bool,
}

/// Everything that determines an experiment's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub conditions: Vec<ConditionId>,
    pub seeds: Vec<u64>,
    /// Environment steps per training run. Overrides `sac.total_steps`.
    pub total_steps: usize,
    pub output_dir: PathBuf,
    /// Parallel (condition, seed) workers; 0 picks one per core.
    pub workers: usize,
    pub dataset: DatasetSource,
    pub env: EnvConfig,
    pub rbc: RbcSchedule,
    pub sac: SacConfig,
    pub reward: RewardConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sac = SacConfig::default();
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            conditions: ConditionId::ALL.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            total_steps: sac.total_steps,
            output_dir: PathBuf::from("runs"),
            workers: 0,
            dataset: DatasetSource::default(),
            env: EnvConfig::default(),
            rbc: RbcSchedule::default(),
            sac,
            reward: RewardConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Eight-week synthetic district, 5,000 steps, two seeds.
    pub fn desk_scale() -> Self {
        Self {
            seeds: DEFAULT_SEEDS[..2].to_vec(),
            total_steps: DESK_STEPS,
            dataset: DatasetSource::Synthetic(SyntheticParams {
                horizon: DESK_HORIZON,
                ..SyntheticParams::default()
            }),
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.with_context(format!("config {}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// SAC settings with the experiment's step budget applied.
    pub fn effective_sac(&self) -> SacConfig {
        SacConfig {
            total_steps: self.total_steps,
            ..self.sac.clone()
        }
    }

    /// Registry entry for `id` with any configured weight override.
    pub fn condition(&self, id: ConditionId) -> Result<Condition> {
        let base = id.condition();
        match self.reward.weights.get(&id) {
            Some(w) => base.with_weights(RewardWeights::new(w.alpha, w.beta, w.gamma)?),
            None => Ok(base),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported config schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.conditions.is_empty() {
            return Err(Error::Config("conditions must not be empty".into()));
        }
        if self.conditions.iter().collect::<BTreeSet<_>>().len() != self.conditions.len() {
            return Err(Error::Config("conditions must be distinct".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::Config(format!("seeds must be distinct, got {:?}", self.seeds)));
        }
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be at least 1".into()));
        }
        if let DatasetSource::Synthetic(p) = &self.dataset {
            if p.buildings == 0 || p.horizon == 0 || p.horizon % 24 != 0 {
                return Err(Error::Config(format!(
                    "synthetic dataset needs buildings >= 1 and a horizon that is a positive multiple of 24, got {} x {}",
                    p.buildings, p.horizon
                )));
            }
        }
        let d = self.reward.deadband;
        if !(d.half_width >= 0.0 && d.span > 0.0 && d.half_width.is_finite() && d.span.is_finite()) {
            return Err(Error::Config(format!(
                "deadband needs half_width >= 0 and span > 0, got {} and {}",
                d.half_width, d.span
            )));
        }
        for &id in self.reward.weights.keys() {
            self.condition(id)?;
        }
        self.env.validate()?;
        self.rbc.validate()?;
        self.effective_sac().validate()?;
        Ok(())
    }
}
