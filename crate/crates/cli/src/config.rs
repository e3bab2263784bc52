use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rltrack::agents::{AgentHyperparams, Algorithm, TrainConfig};
use rltrack::env::{RewardConfig, TrackingConfig};
use serde::{Deserialize, Serialize};

/// Run description as written by the user. Hyperparameters are overrides
/// on top of the algorithm's defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub hyperparams: toml::Table,
    #[serde(default)]
    pub tracking: TrackingConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Directory written by `rltrack phantom`; the built-in desk phantom
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phantom: Option<PathBuf>,
}

/// How trained agents are tracked and scored after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub seeds_per_voxel: usize,
    pub min_length: f64,
    pub max_length: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { seeds_per_voxel: 10, min_length: 20.0, max_length: 200.0 }
    }
}

/// Fully specified run; written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub algorithm: Algorithm,
    pub hyperparams: AgentHyperparams,
    pub tracking: TrackingConfig,
    pub reward: RewardConfig,
    pub train: TrainConfig,
    pub evaluation: EvaluationConfig,
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// Applies `overrides` on the serialised defaults so unknown keys are
/// rejected by the target type.
pub fn hyperparams_with(algo: Algorithm, overrides: &toml::Table) -> Result<AgentHyperparams> {
    let mut table = toml::Table::try_from(AgentHyperparams::for_algorithm(algo))?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    let hp: AgentHyperparams = table.try_into().context("invalid [hyperparams]")?;
    hp.validate()?;
    Ok(hp)
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_toml(p),
            None => Ok(Self::default()),
        }
    }

    /// Fills defaults; `seed` and `out` from the command line win.
    pub fn resolve(&self, seed: Option<u64>, out: Option<&Path>) -> Result<ResolvedConfig> {
        let algorithm = self.algorithm.unwrap_or(Algorithm::SacAuto);
        let Some(out) = out.map(Path::to_path_buf).or_else(|| self.out.clone()) else {
            bail!("no output directory: pass --out or set `out` in the config");
        };
        let hyperparams = hyperparams_with(algorithm, &self.hyperparams)?;
        self.tracking.validate()?;
        self.reward.validate()?;
        self.train.validate()?;
        if self.evaluation.seeds_per_voxel == 0 {
            bail!("evaluation.seeds_per_voxel must be > 0");
        }
        Ok(ResolvedConfig {
            seed: seed.or(self.seed).unwrap_or(0),
            out,
            data: self.data.clone(),
            algorithm,
            hyperparams,
            tracking: self.tracking.clone(),
            reward: self.reward,
            train: self.train.clone(),
            evaluation: self.evaluation.clone(),
        })
    }
}

impl ResolvedConfig {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self)?;
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
