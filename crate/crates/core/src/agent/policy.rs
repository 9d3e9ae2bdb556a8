use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::autodiff::{Tape, Var};
use super::mlp::Mlp;
use crate::error::{Error, Result};

/// Guard inside the tanh change-of-variables term.
pub const LOG_PROB_EPS: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Tanh-squashed diagonal Gaussian policy. The network head emits the
/// pre-squash mean followed by the log standard deviation per action.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub action_dim: usize,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

/// Log-density of the squashed action `tanh(u)` for one dimension.
pub fn squashed_log_prob(u: f64, mean: f64, log_std: f64) -> f64 {
    let z = (u - mean) * (-log_std).exp();
    let a = u.tanh();
    -0.5 * z * z - log_std - HALF_LN_2PI - (1.0 - a * a + LOG_PROB_EPS).ln()
}

/// Samples with their log-probabilities, one row per observation.
#[derive(Debug, Clone)]
pub struct SampledActions {
    pub actions: Array2<f64>,
    /// `[n, 1]`.
    pub log_probs: Array2<f64>,
}

impl GaussianPolicy {
    pub fn new<R: Rng>(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        output_scale: f64,
        log_std_bounds: (f64, f64),
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_dim);
        Self {
            net: Mlp::new(&sizes, output_scale, rng),
            action_dim,
            log_std_min: log_std_bounds.0,
            log_std_max: log_std_bounds.1,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Pre-squash means and clamped log-stds.
    pub fn heads(&self, obs: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let out = self.net.forward(obs);
        let a = self.action_dim;
        let mean = out.slice(ndarray::s![.., ..a]).to_owned();
        let log_std = out
            .slice(ndarray::s![.., a..])
            .mapv(|s| s.clamp(self.log_std_min, self.log_std_max));
        (mean, log_std)
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim() {
            return Err(Error::Usage(format!(
                "policy expects {} observation entries, got {}",
                self.obs_dim(),
                obs.len()
            )));
        }
        Ok(())
    }

    /// `tanh(mean)`: the evaluation-mode action.
    pub fn deterministic(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        let x = ArrayView2::from_shape((1, obs.len()), obs).expect("row view");
        let (mean, _) = self.heads(x);
        Ok(mean.row(0).iter().map(|m| m.tanh()).collect())
    }

    pub fn sample<R: Rng>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        self.check_obs(obs)?;
        let x = ArrayView2::from_shape((1, obs.len()), obs).expect("row view");
        let s = self.sample_batch(x, rng);
        Ok((s.actions.row(0).to_vec(), s.log_probs[[0, 0]]))
    }

    pub fn sample_batch<R: Rng>(&self, obs: ArrayView2<f64>, rng: &mut R) -> SampledActions {
        let (mean, log_std) = self.heads(obs);
        let noise = standard_normal(mean.dim(), rng);
        let mut actions = Array2::zeros(mean.dim());
        let mut log_probs = Array2::zeros((mean.nrows(), 1));
        for ((i, j), &m) in mean.indexed_iter() {
            let s = log_std[[i, j]];
            let u = m + s.exp() * noise[[i, j]];
            actions[[i, j]] = u.tanh();
            log_probs[[i, 0]] += squashed_log_prob(u, m, s);
        }
        SampledActions { actions, log_probs }
    }

    /// Reparameterized sample recorded on `tape`. Returns the squashed
    /// action, its `[n, 1]` log-probability, and the policy parameter leaves.
    pub fn sample_on_tape(
        &self,
        tape: &mut Tape,
        obs: Var,
        noise: Array2<f64>,
    ) -> (Var, Var, Vec<Var>) {
        let a = self.action_dim;
        let (out, leaves) = self.net.forward_tape(tape, obs, true);
        let mean = tape.columns(out, 0, a);
        let raw_log_std = tape.columns(out, a, 2 * a);
        let log_std = tape.clamp(raw_log_std, self.log_std_min, self.log_std_max);
        let std = tape.exp(log_std);
        let eps = tape.constant(noise);
        let spread = tape.mul(std, eps);
        let u = tape.add(mean, spread);
        let action = tape.tanh(u);

        let density = tape.gaussian_log_density(u, mean, log_std);
        let sq = tape.square(action);
        let one_minus = tape.scale(sq, -1.0);
        let one_minus = tape.offset(one_minus, 1.0 + LOG_PROB_EPS);
        let jacobian = tape.ln(one_minus);
        let per_dim = tape.sub(density, jacobian);
        let log_prob = tape.sum_cols(per_dim);
        (action, log_prob, leaves)
    }
}

pub fn standard_normal<R: Rng>(shape: (usize, usize), rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.sample::<f64, _>(StandardNormal))
}

/// Mean action entropy estimate `-E[log π]` from sampled log-probabilities.
pub fn entropy_estimate(log_probs: &Array2<f64>) -> f64 {
    -log_probs.mean_axis(Axis(0)).map(|m| m[0]).unwrap_or(0.0)
}
