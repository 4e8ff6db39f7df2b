//! Deep Q-learning: network, replay, behaviour policy and the training loop
//! that turns episodes into garages.

mod checkpoint;
mod network;
mod replay;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use network::{argmax, QNetwork, Sample};
pub use replay::{ReplayBuffer, Transition};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{encode_observation, EnvConfig, EnvError, GarageEnv, Observation};
use crate::garage_set::GarageSample;
use crate::grid::{Direction, EncodingMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DqnError {
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid layer sizes {0:?}")]
    InvalidArchitecture(Vec<usize>),
    #[error("action index {0} out of range")]
    InvalidAction(usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of `total_timesteps` over which epsilon decays linearly.
    pub exploration_fraction: f64,
    pub batch_size: usize,
    pub target_sync: usize,
    pub total_timesteps: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    /// Environment steps between gradient updates.
    pub train_freq: usize,
    /// Gradient norm clip; infinity disables clipping.
    pub max_grad_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            gamma: 0.99,
            learning_rate: 1e-4,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            exploration_fraction: 0.1,
            batch_size: 32,
            target_sync: 10_000,
            total_timesteps: 100_000,
            buffer_capacity: 100_000,
            warmup: 1_000,
            train_freq: 4,
            max_grad_norm: 10.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = |m: &str| Err(DqnError::InvalidConfig(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0 <= self.epsilon_end
            && self.epsilon_end <= self.epsilon_start
            && self.epsilon_start <= 1.0)
        {
            return bad("need 0 <= epsilon_end <= epsilon_start <= 1");
        }
        if !(0.0..=1.0).contains(&self.exploration_fraction) {
            return bad("exploration_fraction must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.buffer_capacity == 0 {
            return bad("batch_size, target_sync and buffer_capacity must be positive");
        }
        if self.train_freq == 0 {
            return bad("train_freq must be positive");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end`, then constant.
    pub fn epsilon_at(&self, step: usize) -> f64 {
        let horizon = self.exploration_fraction * self.total_timesteps as f64;
        if horizon <= 0.0 {
            return self.epsilon_end;
        }
        let frac = step as f64 / horizon;
        if frac >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }
}

/// Bootstrapped regression target: `r` at terminal states, otherwise
/// `r + gamma * max_a q(s', a)`.
pub fn td_target(reward: f64, next_q: &[f64], done: bool, gamma: f64) -> f64 {
    if done {
        reward
    } else {
        let best = next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        reward + gamma * best
    }
}

/// Epsilon-greedy behaviour policy.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    obs: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, DqnError> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.output_len()));
    }
    Ok(argmax(&net.forward(obs)?))
}

/// One gradient step on the mean squared TD error. Returns the loss before
/// the update.
pub fn train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition<Vec<f64>>],
    cfg: &TrainConfig,
) -> Result<f64, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::EmptyBuffer);
    }
    let mut targets = Vec::with_capacity(batch.len());
    for t in batch {
        let next_q = target.forward(&t.next_obs)?;
        targets.push(td_target(t.reward, &next_q, t.done, cfg.gamma));
    }
    let samples: Vec<Sample<'_>> = batch
        .iter()
        .zip(&targets)
        .map(|(t, &y)| Sample {
            obs: &t.obs,
            action: t.action,
            target: y,
        })
        .collect();
    let (loss, mut grad) = net.loss_and_gradient(&samples)?;
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > cfg.max_grad_norm {
        let s = cfg.max_grad_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    net.descend(&grad, cfg.learning_rate);
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub return_: f64,
    pub length: usize,
    pub usable: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeStats>,
    pub losses: Vec<f64>,
}

impl TrainingLog {
    /// `episode,return,length,usable` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,return,length,usable\n");
        for e in &self.episodes {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.episode,
                e.return_,
                e.length,
                u8::from(e.usable)
            );
        }
        out
    }

    /// Mean return of the first and last tenth of the episodes.
    pub fn decile_means(&self) -> Option<(f64, f64)> {
        let n = self.episodes.len();
        if n < 10 {
            return None;
        }
        let k = n / 10;
        let mean = |s: &[EpisodeStats]| s.iter().map(|e| e.return_).sum::<f64>() / s.len() as f64;
        Some((mean(&self.episodes[..k]), mean(&self.episodes[n - k..])))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub net: QNetwork,
    pub log: TrainingLog,
    pub garages: Vec<GarageSample>,
}

/// Stepwise DQN trainer. [`train`] drives it to completion; tests use it to
/// inspect intermediate state.
pub struct Trainer {
    cfg: TrainConfig,
    env: GarageEnv,
    rng: ChaCha8Rng,
    net: QNetwork,
    target: QNetwork,
    buffer: ReplayBuffer<Observation>,
    steps: usize,
    log: TrainingLog,
    garages: Vec<GarageSample>,
    current: Option<Running>,
}

struct Running {
    obs: Observation,
    encoded: Vec<f64>,
    seed: u64,
    return_: f64,
    length: usize,
}

impl Trainer {
    pub fn new(map: EncodingMatrix, env_cfg: EnvConfig, cfg: TrainConfig) -> Result<Self, DqnError> {
        cfg.validate()?;
        let input = env_cfg.observation_len();
        let env = GarageEnv::new(map, env_cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut sizes = vec![input];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(Direction::ALL.len());
        let net = QNetwork::new(&sizes, &mut rng)?;
        Ok(Self {
            target: net.clone(),
            net,
            env,
            rng,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            steps: 0,
            log: TrainingLog::default(),
            garages: Vec::new(),
            current: None,
            cfg,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.steps >= self.cfg.total_timesteps
    }

    pub fn net(&self) -> &QNetwork {
        &self.net
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    fn begin_episode(&mut self) -> Result<(), DqnError> {
        let seed = self.rng.random::<u64>();
        let obs = self.env.reset(seed)?;
        self.current = Some(Running {
            encoded: encode_observation(&obs),
            obs,
            seed,
            return_: 0.0,
            length: 0,
        });
        Ok(())
    }

    fn end_episode(&mut self) {
        let Some(run) = self.current.take() else {
            return;
        };
        let usable = self.env.connected();
        let episode = self.log.episodes.len();
        self.log.episodes.push(EpisodeStats {
            episode,
            return_: run.return_,
            length: run.length,
            usable,
        });
        if let Some(m) = self.env.matrix() {
            self.garages.push(GarageSample {
                episode,
                seed: run.seed,
                usable,
                matrix: m.clone(),
            });
        }
    }

    /// Advances one environment step (and any learning it triggers).
    pub fn advance(&mut self) -> Result<(), DqnError> {
        if self.is_finished() {
            return Ok(());
        }
        if self.current.is_none() {
            self.begin_episode()?;
        }
        let eps = self.cfg.epsilon_at(self.steps);
        let run = self.current.as_ref().expect("episode running");
        let action = select_action(&self.net, &run.encoded, eps, &mut self.rng)?;
        let out = self
            .env
            .step(Direction::from_index(action).expect("network has four outputs"))?;
        let terminal = out.info.reached_exit || out.info.error_overflow;
        let next_encoded = encode_observation(&out.observation);
        let run = self.current.as_mut().expect("episode running");
        self.buffer.push(Transition {
            obs: std::mem::replace(&mut run.obs, out.observation.clone()),
            action,
            reward: out.reward,
            next_obs: out.observation,
            done: terminal,
        });
        run.encoded = next_encoded;
        run.return_ += out.reward;
        run.length += 1;
        self.steps += 1;

        if self.steps > self.cfg.warmup && self.steps % self.cfg.train_freq == 0 {
            self.learn()?;
        }
        if self.steps % self.cfg.target_sync == 0 {
            self.target = self.net.clone();
        }
        if out.done || self.is_finished() {
            self.end_episode();
        }
        Ok(())
    }

    fn learn(&mut self) -> Result<(), DqnError> {
        let sampled = self.buffer.sample(self.cfg.batch_size, &mut self.rng);
        if sampled.is_empty() {
            return Err(DqnError::EmptyBuffer);
        }
        let batch: Vec<Transition<Vec<f64>>> = sampled
            .into_iter()
            .map(|t| Transition {
                obs: encode_observation(&t.obs),
                action: t.action,
                reward: t.reward,
                next_obs: encode_observation(&t.next_obs),
                done: t.done,
            })
            .collect();
        let refs: Vec<&Transition<Vec<f64>>> = batch.iter().collect();
        let loss = train_step(&mut self.net, &self.target, &refs, &self.cfg)?;
        self.log.losses.push(loss);
        Ok(())
    }

    pub fn finish(mut self) -> Result<TrainOutput, DqnError> {
        while !self.is_finished() {
            self.advance()?;
        }
        self.end_episode();
        Ok(TrainOutput {
            net: self.net,
            log: self.log,
            garages: self.garages,
        })
    }
}

/// Trains on one initial map for `cfg.total_timesteps` environment steps.
/// Every finished episode contributes its final matrix to the garage set.
pub fn train(map: EncodingMatrix, env_cfg: EnvConfig, cfg: TrainConfig) -> Result<TrainOutput, DqnError> {
    Trainer::new(map, env_cfg, cfg)?.finish()
}

/// Runs the greedy policy for one episode. Returns whether the exit was
/// reached, together with the final matrix.
pub fn greedy_rollout(
    net: &QNetwork,
    map: EncodingMatrix,
    env_cfg: EnvConfig,
    seed: u64,
) -> Result<(bool, EncodingMatrix), DqnError> {
    let mut env = GarageEnv::new(map, env_cfg)?;
    let mut obs = env.reset(seed)?;
    loop {
        let a = argmax(&net.forward(&encode_observation(&obs))?);
        let out = env.step(Direction::from_index(a).expect("four actions"))?;
        obs = out.observation;
        if out.done {
            let m = env.matrix().cloned().expect("episode running");
            return Ok((out.info.reached_exit, m));
        }
    }
}
