use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use super::sac::{SacAgent, SacConfig, UpdateDiagnostics};
use crate::error::{Error, Result};

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Reached a terminal state: no bootstrapping past it.
    pub terminated: bool,
    /// Hit the episode horizon; the value of the next state still counts.
    pub truncated: bool,
}

/// A continuous-control task with actions in `[-1, 1]^action_dim`.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub episode: usize,
    pub reward: f64,
    pub update: Option<UpdateDiagnostics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<StepRecord>,
    /// Returns of completed episodes, in order.
    pub episode_returns: Vec<f64>,
}

impl TrainingLog {
    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["step", "episode", "reward", "q1_loss", "q2_loss", "policy_loss", "alpha", "entropy"])
            .map_err(err)?;
        for r in &self.records {
            let mut row = vec![r.step.to_string(), r.episode.to_string(), r.reward.to_string()];
            match r.update {
                Some(u) => row.extend(
                    [u.q1_loss, u.q2_loss, u.policy_loss, u.alpha, u.entropy].map(|x| x.to_string()),
                ),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Seed used for the `episode`-th reset of a run.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(episode as u64)
}

/// Number of episodes a training budget spans.
pub fn episodes_spanned(total_steps: usize, horizon: usize) -> f64 {
    total_steps as f64 / horizon as f64
}

/// Trains a fresh agent. Episodes roll over without interrupting the update
/// schedule, and all randomness derives from `seed`.
pub fn train<E: Environment>(env: &mut E, config: &SacConfig, seed: u64) -> Result<(SacAgent, TrainingLog)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (obs_dim, action_dim) = (env.observation_dim(), env.action_dim());
    let mut agent = SacAgent::new(obs_dim, action_dim, config.clone(), &mut rng)?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity, obs_dim, action_dim);
    let mut log = TrainingLog::default();

    let mut episode = 0;
    let mut episode_return = 0.0;
    let mut obs = env.reset(episode_seed(seed, episode))?;
    for step in 0..config.total_steps {
        let action: Vec<f64> = if step < config.warmup_steps {
            (0..action_dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            agent.policy.sample(&obs, &mut rng)?.0
        };
        let out = env.step(&action)?;
        episode_return += out.reward;
        buffer.push(&Transition {
            obs: std::mem::take(&mut obs),
            action,
            reward: out.reward,
            next_obs: out.observation.clone(),
            done: out.terminated,
        });

        let mut update = None;
        if step >= config.warmup_steps && (step - config.warmup_steps) % config.update_interval == 0 {
            if let Some(batch) = buffer.sample(config.batch_size, &mut rng) {
                let diag = agent.update(&batch, &mut rng).map_err(|e| Error::Training {
                    step,
                    message: e.to_string(),
                })?;
                update = Some(diag);
            }
        }
        log.records.push(StepRecord {
            step,
            episode,
            reward: out.reward,
            update,
        });

        if out.terminated || out.truncated {
            log.episode_returns.push(episode_return);
            episode_return = 0.0;
            episode += 1;
            obs = env.reset(episode_seed(seed, episode))?;
        } else {
            obs = out.observation;
        }
    }
    Ok((agent, log))
}

/// Mean return of `episodes` rollouts with the given action rule.
pub fn mean_return<E: Environment>(
    env: &mut E,
    episodes: usize,
    base_seed: u64,
    mut act: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<f64> {
    let mut total = 0.0;
    for ep in 0..episodes {
        let mut obs = env.reset(base_seed + ep as u64)?;
        loop {
            let out = env.step(&act(&obs)?)?;
            total += out.reward;
            if out.terminated || out.truncated {
                break;
            }
            obs = out.observation;
        }
    }
    Ok(total / episodes as f64)
}
