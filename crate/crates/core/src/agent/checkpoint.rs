//! Policy checkpoints.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "format": "gridcomfort-policy",
//!   "version": 1,
//!   "seed": 42,
//!   "layer_sizes": [14, 256, 256, 10],
//!   "action_dim": 5,
//!   "log_std_bounds": [-20.0, 2.0],
//!   "params": [{"rows": 14, "cols": 256, "data": [...]}, ...],
//!   "sac_config": {...},
//!   "metadata": {...}
//! }
//! ```
//!
//! `params` alternates weight `[fan_in, fan_out]` and bias `[1, fan_out]`
//! arrays in row-major order. Values are 64-bit floats written in shortest
//! round-trip form, so save followed by load is bit-exact.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::policy::GaussianPolicy;
use super::sac::SacConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "gridcomfort-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub layer_sizes: Vec<usize>,
    pub action_dim: usize,
    pub log_std_bounds: (f64, f64),
    pub params: Vec<ParamArray>,
    pub sac_config: SacConfig,
    /// Free-form run context (condition, environment settings).
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl PolicyCheckpoint {
    pub fn from_policy(
        policy: &GaussianPolicy,
        sac_config: &SacConfig,
        seed: u64,
        metadata: serde_json::Value,
    ) -> Self {
        let params = policy
            .net
            .params()
            .iter()
            .map(|p| ParamArray {
                rows: p.nrows(),
                cols: p.ncols(),
                data: p.iter().copied().collect(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            seed,
            layer_sizes: policy.net.sizes().to_vec(),
            action_dim: policy.action_dim,
            log_std_bounds: (policy.log_std_min, policy.log_std_max),
            params,
            sac_config: sac_config.clone(),
            metadata,
        }
    }

    pub fn policy(&self) -> Result<GaussianPolicy> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let params = self
            .params
            .iter()
            .map(|p| {
                Array2::from_shape_vec((p.rows, p.cols), p.data.clone())
                    .map_err(|e| Error::Config(format!("bad checkpoint array: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let net = Mlp::from_params(self.layer_sizes.clone(), params)?;
        if net.output_dim() != 2 * self.action_dim {
            return Err(Error::Config("checkpoint head does not match action_dim".into()));
        }
        Ok(GaussianPolicy {
            net,
            action_dim: self.action_dim,
            log_std_min: self.log_std_bounds.0,
            log_std_max: self.log_std_bounds.1,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let policy = GaussianPolicy::new(6, 2, &[32, 32], 1.0, (-20.0, 2.0), &mut rng);
            let ckpt = PolicyCheckpoint::from_policy(
                &policy,
                &SacConfig::default(),
                seed,
                serde_json::json!({"condition": "E5"}),
            );
            let path = dir.path().join(format!("p{seed}.json"));
            ckpt.save(&path).unwrap();
            let back = PolicyCheckpoint::load(&path).unwrap();
            assert_eq!(back, ckpt);
            assert_eq!(back.policy().unwrap(), policy);
        }
    }

    #[test]
    fn rejects_foreign_format() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = GaussianPolicy::new(2, 1, &[4], 1.0, (-20.0, 2.0), &mut rng);
        let mut ckpt = PolicyCheckpoint::from_policy(&policy, &SacConfig::default(), 1, serde_json::Value::Null);
        ckpt.format = "other".into();
        assert!(ckpt.policy().is_err());
    }
}
