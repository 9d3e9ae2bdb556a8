use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::{EnvStep, Environment};
use crate::error::{Error, Result};

/// One-dimensional tracking task: the state is the offset from a target,
/// the action shifts it, and the reward is the negative squared offset.
#[derive(Debug, Clone)]
pub struct TrackingEnv {
    pub horizon: usize,
    /// Offset change per unit action.
    pub gain: f64,
    /// Offsets are confined to `[-limit, limit]`.
    pub limit: f64,
    offset: f64,
    t: usize,
    rng: ChaCha8Rng,
}

impl Default for TrackingEnv {
    fn default() -> Self {
        Self {
            horizon: 64,
            gain: 0.5,
            limit: 2.0,
            offset: 0.0,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl TrackingEnv {
    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.offset / self.limit]
    }
}

impl Environment for TrackingEnv {
    fn observation_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.offset = self.rng.random_range(-0.75 * self.limit..=0.75 * self.limit);
        self.t = 0;
        Ok(self.observe())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if self.t >= self.horizon {
            return Err(Error::Usage("step after episode end".into()));
        }
        let [a] = action else {
            return Err(Error::Usage(format!("expected 1 action, got {}", action.len())));
        };
        let a = a.clamp(-1.0, 1.0);
        self.offset = (self.offset + self.gain * a).clamp(-self.limit, self.limit);
        self.t += 1;
        Ok(EnvStep {
            observation: self.observe(),
            reward: -self.offset * self.offset,
            terminated: false,
            truncated: self.t == self.horizon,
        })
    }
}
