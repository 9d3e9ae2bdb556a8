//! Soft Actor-Critic with twin critics, Polyak-averaged targets and
//! automatic entropy-coefficient tuning.

use ndarray::{Array2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::autodiff::Tape;
use super::mlp::Mlp;
use super::policy::{entropy_estimate, standard_normal, GaussianPolicy};
use super::replay::Batch;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub discount: f64,
    pub soft_update_tau: f64,
    /// Tune the entropy coefficient toward `target_entropy`.
    pub auto_entropy: bool,
    /// Defaults to `-action_dim` when unset.
    pub target_entropy: Option<f64>,
    pub initial_alpha: f64,
    pub total_steps: usize,
    /// Uniform-random steps before learning starts.
    pub warmup_steps: usize,
    /// Environment steps between gradient updates.
    pub update_interval: usize,
    pub log_std_min: f64,
    pub log_std_max: f64,
    /// Scale of the policy output layer at initialization.
    pub policy_output_scale: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            learning_rate: 3e-4,
            buffer_capacity: 100_000,
            batch_size: 256,
            discount: 0.99,
            soft_update_tau: 0.005,
            auto_entropy: true,
            target_entropy: None,
            initial_alpha: 1.0,
            total_steps: 50_000,
            warmup_steps: 1_000,
            update_interval: 1,
            log_std_min: -20.0,
            log_std_max: 2.0,
            policy_output_scale: 1e-2,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return fail(format!("discount must lie in (0, 1), got {}", self.discount));
        }
        if !(self.soft_update_tau > 0.0 && self.soft_update_tau <= 1.0) {
            return fail(format!("soft_update_tau must lie in (0, 1], got {}", self.soft_update_tau));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail(format!("hidden layer sizes must be positive, got {:?}", self.hidden));
        }
        for (name, v) in [
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("total_steps", self.total_steps),
            ("update_interval", self.update_interval),
        ] {
            if v == 0 {
                return fail(format!("{name} must be a positive integer"));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return fail("batch_size exceeds buffer_capacity".into());
        }
        if !(self.log_std_min < self.log_std_max) {
            return fail("log_std_min must be below log_std_max".into());
        }
        if !(self.initial_alpha > 0.0) {
            return fail("initial_alpha must be > 0".into());
        }
        Ok(())
    }
}

/// Losses and coefficients from one gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub policy_loss: f64,
    /// Entropy coefficient after the update.
    pub alpha: f64,
    /// `-mean(log π)` of the reparameterized batch sample.
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub config: SacConfig,
    pub policy: GaussianPolicy,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    pub log_alpha: f64,
    pub target_entropy: f64,
    policy_opt: Adam,
    q1_opt: Adam,
    q2_opt: Adam,
    alpha_opt: Adam,
    updates: u64,
}

impl SacAgent {
    pub fn new<R: Rng>(obs_dim: usize, action_dim: usize, config: SacConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let policy = GaussianPolicy::new(
            obs_dim,
            action_dim,
            &config.hidden,
            config.policy_output_scale,
            (config.log_std_min, config.log_std_max),
            rng,
        );
        let mut q_sizes = vec![obs_dim + action_dim];
        q_sizes.extend_from_slice(&config.hidden);
        q_sizes.push(1);
        let q1 = Mlp::new(&q_sizes, 1.0, rng);
        let q2 = Mlp::new(&q_sizes, 1.0, rng);
        let lr = config.learning_rate;
        Ok(Self {
            policy_opt: Adam::for_params(lr, policy.net.params()),
            q1_opt: Adam::for_params(lr, q1.params()),
            q2_opt: Adam::for_params(lr, q2.params()),
            alpha_opt: Adam::new(lr, [(1, 1)]),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            log_alpha: config.initial_alpha.ln(),
            target_entropy: config.target_entropy.unwrap_or(-(action_dim as f64)),
            policy,
            q1,
            q2,
            config,
            updates: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.obs_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.policy.action_dim
    }

    pub fn parameters_finite(&self) -> bool {
        self.policy.net.all_finite()
            && self.q1.all_finite()
            && self.q2.all_finite()
            && self.q1_target.all_finite()
            && self.q2_target.all_finite()
            && self.log_alpha.is_finite()
    }

    /// One gradient step on entropy coefficient, critics and actor, then a
    /// soft target update.
    pub fn update<R: Rng>(&mut self, batch: &Batch, rng: &mut R) -> Result<UpdateDiagnostics> {
        let n = batch.len();
        let a_dim = self.action_dim();

        // Reparameterized policy sample; the graph stays open until the
        // critics have been updated.
        let mut actor_tape = Tape::new();
        let obs = actor_tape.constant(batch.obs.clone());
        let noise = standard_normal((n, a_dim), rng);
        let (pi_action, pi_log_prob, policy_leaves) =
            self.policy.sample_on_tape(&mut actor_tape, obs, noise);
        let entropy = entropy_estimate(actor_tape.value(pi_log_prob));

        // Entropy coefficient: loss = -log α · (log π + target), so the
        // gradient with respect to log α is entropy - target.
        if self.config.auto_entropy {
            let grad = entropy - self.target_entropy;
            let mut p = [Array2::from_elem((1, 1), self.log_alpha)];
            self.alpha_opt.step(&mut p, &[Array2::from_elem((1, 1), grad)]);
            self.log_alpha = p[0][[0, 0]];
        }
        let alpha = self.alpha();

        // Soft Bellman targets from the target critics.
        let next = self.policy.sample_batch(batch.next_obs.view(), rng);
        let next_input = concat(&batch.next_obs, &next.actions);
        let q1_next = self.q1_target.forward(next_input.view());
        let q2_next = self.q2_target.forward(next_input.view());
        let discount = self.config.discount;
        let mut target = Array2::zeros((n, 1));
        Zip::from(&mut target)
            .and(&batch.rewards)
            .and(&batch.dones)
            .and(&q1_next)
            .and(&q2_next)
            .and(&next.log_probs)
            .for_each(|y, &r, &d, &q1, &q2, &lp| {
                *y = r + discount * (1.0 - d) * (q1.min(q2) - alpha * lp);
            });

        let sa = concat(&batch.obs, &batch.actions);
        let (q1_loss, q1_grads) = critic_loss_and_grads(&self.q1, &sa, &target);
        let (q2_loss, q2_grads) = critic_loss_and_grads(&self.q2, &sa, &target);
        if !(q1_loss.is_finite() && q2_loss.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite critic loss (q1 {q1_loss}, q2 {q2_loss}, alpha {alpha}, entropy {entropy})"
            )));
        }
        self.q1_opt.step(self.q1.params_mut(), &q1_grads);
        self.q2_opt.step(self.q2.params_mut(), &q2_grads);

        // Actor: minimize α·log π − min(Q1, Q2) through the updated critics.
        let q_in = actor_tape.concat(obs, pi_action);
        let (q1_pi, _) = self.q1.forward_tape(&mut actor_tape, q_in, false);
        let (q2_pi, _) = self.q2.forward_tape(&mut actor_tape, q_in, false);
        let q_pi = actor_tape.min(q1_pi, q2_pi);
        let weighted = actor_tape.scale(pi_log_prob, alpha);
        let objective = actor_tape.sub(weighted, q_pi);
        let policy_loss_var = actor_tape.mean(objective);
        let policy_loss = actor_tape.scalar(policy_loss_var);
        if !policy_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite policy loss (q1 {q1_loss}, q2 {q2_loss}, alpha {alpha}, entropy {entropy})"
            )));
        }
        let mut grads = actor_tape.backward(policy_loss_var);
        let policy_grads: Vec<Array2<f64>> = policy_leaves
            .iter()
            .zip(self.policy.net.params())
            .map(|(&v, p)| grads.take_or_zeros(v, p.dim()))
            .collect();
        self.policy_opt.step(self.policy.net.params_mut(), &policy_grads);

        let tau = self.config.soft_update_tau;
        self.q1_target.soft_update_from(&self.q1, tau);
        self.q2_target.soft_update_from(&self.q2, tau);
        self.updates += 1;

        if !self.parameters_finite() {
            return Err(Error::Numerical("non-finite parameters after update".into()));
        }
        Ok(UpdateDiagnostics {
            q1_loss,
            q2_loss,
            policy_loss,
            alpha,
            entropy,
        })
    }
}

fn concat(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(ndarray::Axis(1), &[a.view(), b.view()]).expect("matching rows")
}

/// Mean squared error of one critic against fixed targets, with gradients.
/// The per-critic loss carries the conventional factor 1/2.
fn critic_loss_and_grads(q: &Mlp, input: &Array2<f64>, target: &Array2<f64>) -> (f64, Vec<Array2<f64>>) {
    let mut tape = Tape::new();
    let x = tape.constant(input.clone());
    let y = tape.constant(target.clone());
    let (out, leaves) = q.forward_tape(&mut tape, x, true);
    let err = tape.sub(out, y);
    let sq = tape.square(err);
    let mse = tape.mean(sq);
    let loss = tape.scale(mse, 0.5);
    let mse_value = tape.scalar(mse);
    let mut grads = tape.backward(loss);
    let g = leaves
        .iter()
        .zip(q.params())
        .map(|(&v, p)| grads.take_or_zeros(v, p.dim()))
        .collect();
    (mse_value, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::replay::{ReplayBuffer, Transition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> SacConfig {
        SacConfig {
            hidden: vec![16, 16],
            batch_size: 32,
            buffer_capacity: 1000,
            ..SacConfig::default()
        }
    }

    fn filled_buffer(rng: &mut ChaCha8Rng) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(1000, 3, 2);
        for _ in 0..200 {
            let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let next_obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let action: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            buf.push(&Transition {
                reward: obs[0] - action[1].powi(2),
                obs,
                action,
                next_obs,
                done: rng.random_bool(0.05),
            });
        }
        buf
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = SacConfig { discount: 1.0, ..small_config() };
        assert!(bad.validate().is_err());
        let bad = SacConfig { soft_update_tau: 0.0, ..small_config() };
        assert!(bad.validate().is_err());
        let bad = SacConfig { batch_size: 0, ..small_config() };
        assert!(bad.validate().is_err());
        SacConfig::default().validate().unwrap();
    }

    #[test]
    fn tau_one_copies_online_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = SacConfig { soft_update_tau: 1.0, ..small_config() };
        let mut agent = SacAgent::new(3, 2, cfg, &mut rng).unwrap();
        let buf = filled_buffer(&mut rng);
        let batch = buf.sample(32, &mut rng).unwrap();
        agent.update(&batch, &mut rng).unwrap();
        assert_eq!(agent.q1_target, agent.q1);
        assert_eq!(agent.q2_target, agent.q2);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SacConfig { learning_rate: 0.0, ..small_config() };
        let mut agent = SacAgent::new(3, 2, cfg, &mut rng).unwrap();
        let before = agent.clone();
        let buf = filled_buffer(&mut rng);
        for _ in 0..3 {
            let batch = buf.sample(32, &mut rng).unwrap();
            agent.update(&batch, &mut rng).unwrap();
        }
        assert_eq!(agent.policy, before.policy);
        assert_eq!(agent.q1, before.q1);
        assert_eq!(agent.q2, before.q2);
        assert_eq!(agent.q1_target, before.q1_target);
        assert_eq!(agent.log_alpha, before.log_alpha);
    }

    #[test]
    fn alpha_moves_toward_target_entropy() {
        for (seed, target) in [(2u64, 10.0), (3, -10.0), (4, 0.5), (5, -3.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = SacConfig {
                target_entropy: Some(target),
                ..small_config()
            };
            let mut agent = SacAgent::new(3, 2, cfg, &mut rng).unwrap();
            let buf = filled_buffer(&mut rng);
            let batch = buf.sample(32, &mut rng).unwrap();
            let before = agent.log_alpha;
            let d = agent.update(&batch, &mut rng).unwrap();
            let delta = agent.log_alpha - before;
            assert_eq!(delta.signum(), (target - d.entropy).signum(), "target {target} entropy {}", d.entropy);
        }
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut agent = SacAgent::new(3, 2, small_config(), &mut rng).unwrap();
            let buf = filled_buffer(&mut rng);
            let mut log = Vec::new();
            for _ in 0..5 {
                let batch = buf.sample(32, &mut rng).unwrap();
                log.push(agent.update(&batch, &mut rng).unwrap());
            }
            (log, agent.policy)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn target_networks_stay_equal_when_online_is_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let agent = SacAgent::new(3, 2, small_config(), &mut rng).unwrap();
        let mut t = agent.q1_target.clone();
        for _ in 0..100 {
            t.soft_update_from(&agent.q1, 0.005);
        }
        assert_eq!(t, agent.q1);
    }
}
