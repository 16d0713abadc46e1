//! Deep Q-learning over the dual-augmented observation.
//!
//! The per-step reward is the Lagrangian `f0 + lambda * v_neg`: fairness plus
//! the dual-weighted negative part of the scaled delay slack. The dual variable
//! is part of the observation, so one network serves every constraint price.

mod artifact;
mod mlp;
mod replay;

pub use artifact::{PolicyArtifact, PolicyMeta, MAGIC as ARTIFACT_MAGIC, VERSION as ARTIFACT_VERSION};
pub use mlp::{Adam, Dense, Gradients, Mlp};
pub use replay::{ReplayBuffer, Transition, TransitionRef};

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{sample_lambda, CostShaping, DualParams};
use crate::env::{Env, EnvConfig, StepResult};
use crate::error::{ConfigError, Error, Result};
use crate::metrics::NodeWindow;

/// `f0 + lambda * v_neg`.
#[inline]
pub fn assemble_reward(f0: f64, lambda: f64, v_neg: f64) -> f64 {
    debug_assert!(v_neg <= 0.0);
    f0 + lambda * v_neg
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice over `qvalues`.
pub fn select_action<R: Rng + ?Sized>(qvalues: &[f64], epsilon: f64, rng: &mut R) -> usize {
    assert!(!qvalues.is_empty(), "no actions to choose from");
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..qvalues.len())
    } else {
        argmax(qvalues)
    }
}

/// One-step Q-learning targets `r + gamma * max_a' Q_target(s', a')`, or `r`
/// for terminal transitions. `q_target` maps a batch of observations (rows) to
/// action values.
pub fn td_targets<F>(batch: &[TransitionRef], q_target: F, gamma: f64) -> Vec<f64>
where
    F: Fn(ArrayView2<f64>) -> Array2<f64>,
{
    assert!(!batch.is_empty(), "empty batch");
    let dim = batch[0].next_obs.len();
    let next = Array2::from_shape_fn((batch.len(), dim), |(i, j)| batch[i].next_obs[j]);
    let q = q_target(next.view());
    batch
        .iter()
        .zip(q.rows())
        .map(|(t, row)| {
            if t.terminal {
                t.reward
            } else {
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                t.reward + gamma * best
            }
        })
        .collect()
}

/// Linear decay from `start` to `end` over `decay_steps`, then constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        (self.start + (self.end - self.start) * frac).clamp(self.end, self.start)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of all training steps over which epsilon decays.
    pub epsilon_decay_fraction: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    /// Environment steps between target-network copies.
    pub target_sync_interval: u64,
    pub episodes: u32,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            buffer_capacity: 100_000,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay_fraction: 0.5,
            learning_rate: 1e-5,
            batch_size: 256,
            hidden: vec![1024, 1024, 1024],
            target_sync_interval: 1000,
            episodes: 10_000,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::invalid("gamma", "must lie in [0, 1)"));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::invalid("buffer_capacity", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) {
            return Err(ConfigError::invalid("epsilon_start", "must lie in [0, 1]"));
        }
        if !(0.0..=self.epsilon_start).contains(&self.epsilon_end) {
            return Err(ConfigError::invalid(
                "epsilon_end",
                "must lie in [0, epsilon_start]",
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(ConfigError::invalid(
                "epsilon_decay_fraction",
                "must lie in [0, 1]",
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ConfigError::invalid("learning_rate", "must be > 0"));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(ConfigError::invalid(
                "batch_size",
                "must be >= 1 and at most buffer_capacity",
            ));
        }
        if self.hidden.contains(&0) {
            return Err(ConfigError::invalid("hidden", "layer widths must be >= 1"));
        }
        if self.target_sync_interval == 0 {
            return Err(ConfigError::invalid("target_sync_interval", "must be >= 1"));
        }
        if self.episodes == 0 {
            return Err(ConfigError::invalid("episodes", "must be >= 1"));
        }
        Ok(())
    }
}

/// Online and target networks with their optimizer.
#[derive(Clone, Debug)]
pub struct Dqn {
    pub online: Mlp,
    pub target: Mlp,
    pub gamma: f64,
    opt: Adam,
}

impl Dqn {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        actions: usize,
        hidden: &[usize],
        learning_rate: f64,
        gamma: f64,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(actions);
        let online = Mlp::new(&sizes, rng);
        Self {
            target: online.clone(),
            opt: Adam::new(&online, learning_rate),
            online,
            gamma,
        }
    }

    pub fn q_values(&self, obs: &[f64]) -> Vec<f64> {
        self.online.forward_one(obs)
    }

    /// One gradient step on the mean squared TD error of `batch`. The target
    /// network is left untouched. Returns the loss before the step.
    pub fn train_step(&mut self, batch: &[TransitionRef]) -> f64 {
        let targets = td_targets(batch, |x| self.target.forward(x), self.gamma);
        let dim = batch[0].obs.len();
        let x = Array2::from_shape_fn((batch.len(), dim), |(i, j)| batch[i].obs[j]);
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let (loss, grads) = self.online.td_loss_and_grad(x.view(), &actions, &targets);
        self.opt.step(&mut self.online, &grads);
        loss
    }

    /// Samples a batch and trains on it; `None` while the buffer is too small.
    pub fn train_from<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        batch_size: usize,
        rng: &mut R,
    ) -> Option<f64> {
        let batch = buffer.sample(rng, batch_size)?;
        Some(self.train_step(&batch))
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.online);
    }
}

/// One control step as written to the metrics log.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub episode: u32,
    pub step: u32,
    pub global_step: u64,
    /// `None` when the step ran with fixed parameters.
    pub action: Option<usize>,
    pub epsilon: f64,
    pub lambda: f64,
    pub v: f64,
    pub v_scaled: f64,
    pub v_ema: f64,
    pub reward: f64,
    pub loss: Option<f64>,
    pub jfi: f64,
    pub delay_inst_us: f64,
    pub delay_smooth_us: f64,
    pub collision_trend: f64,
    pub airtime_util: f64,
    pub violation_rate: f64,
    pub nodes: Vec<NodeWindow>,
}

impl StepRecord {
    fn from_step(
        episode: u32,
        global_step: u64,
        action: Option<usize>,
        epsilon: f64,
        r: &StepResult,
        v_ema: f64,
        loss: Option<f64>,
    ) -> Self {
        Self {
            episode,
            step: r.step,
            global_step,
            action,
            epsilon,
            lambda: r.lambda,
            v: r.signal.v,
            v_scaled: r.signal.v_scaled,
            v_ema,
            reward: assemble_reward(r.f0, r.lambda, r.signal.v_neg),
            loss,
            jfi: r.info.jfi,
            delay_inst_us: r.info.pc1_delay_inst_us,
            delay_smooth_us: r.info.pc1_delay_smooth_us,
            collision_trend: r.info.collision_trend,
            airtime_util: r.info.airtime_util,
            violation_rate: r.info.violation_rate,
            nodes: r.info.nodes.clone(),
        }
    }
}

/// Everything a training run needs besides its seed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSetup {
    pub env: EnvConfig,
    pub dual: DualParams,
    pub shaping: CostShaping,
    pub learner: LearnerConfig,
}

fn learner_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Starts episode `episode`: the first one (and every one under hard resets)
/// gets a fresh simulator, the others continue the running medium.
fn start_episode(env: &mut Env, episode: u32, seed: u64, lambda0: f64) -> Vec<f64> {
    if episode == 0 || env.config().hard_reset {
        env.reset(seed.wrapping_add(episode as u64), lambda0)
    } else {
        env.begin_episode(lambda0)
    }
}

/// Full training loop. `sink` receives one record per environment step.
pub fn run_training(
    setup: &TrainSetup,
    seed: u64,
    mut sink: impl FnMut(&StepRecord) -> Result<()>,
) -> Result<PolicyArtifact> {
    setup.learner.validate().map_err(|e| e.within("learner"))?;
    let cfg = &setup.learner;
    let mut env = Env::new(setup.env.clone(), setup.dual.clone(), setup.shaping, seed)?;
    let obs_dim = env.observation_dim();
    let actions = env.action_space().cardinality();
    if env.observation().len() != obs_dim {
        return Err(Error::Dimension(format!(
            "environment observation has {} features, expected {obs_dim}",
            env.observation().len()
        )));
    }

    let mut rng = learner_rng(seed);
    let mut agent = Dqn::new(obs_dim, actions, &cfg.hidden, cfg.learning_rate, cfg.gamma, &mut rng);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let episode_steps = setup.env.episode_steps as u64;
    let total = cfg.episodes as u64 * episode_steps;
    let schedule = EpsilonSchedule {
        start: cfg.epsilon_start,
        end: cfg.epsilon_end,
        decay_steps: (total as f64 * cfg.epsilon_decay_fraction).round() as u64,
    };
    let lambda_max = setup.dual.lambda_max;

    let mut global: u64 = 0;
    for episode in 0..cfg.episodes {
        let lambda0 = sample_lambda(&mut rng, lambda_max);
        let mut obs = start_episode(&mut env, episode, seed, lambda0);
        loop {
            let epsilon = schedule.value(global);
            let q = agent.q_values(&obs);
            let action = select_action(&q, epsilon, &mut rng);
            let r = env.step(action)?;
            let reward = assemble_reward(r.f0, r.lambda, r.signal.v_neg);
            buffer.push(Transition {
                obs: std::mem::take(&mut obs),
                action,
                reward,
                next_obs: r.observation.clone(),
                terminal: false,
            });
            let loss = agent.train_from(&buffer, cfg.batch_size, &mut rng);
            global += 1;
            if global.is_multiple_of(cfg.target_sync_interval) {
                agent.sync_target();
            }
            sink(&StepRecord::from_step(
                episode,
                global,
                Some(action),
                epsilon,
                &r,
                env.dual().v_ema,
                loss,
            ))?;
            obs = r.observation;
            if r.done {
                break;
            }
        }
    }

    Ok(PolicyArtifact {
        net: agent.online,
        meta: PolicyMeta {
            action_mode: setup.env.action_mode,
            observation_dim: obs_dim,
            action_count: actions,
            node_count: setup.env.node_count(),
            lambda_max,
            d_th_us: setup.env.metrics.d_th_us,
            cr_lbt: setup.env.cr_lbt,
            scaling: setup.shaping == CostShaping::Scaled,
            episodes: cfg.episodes,
            seed,
        },
    })
}

/// Checks that a policy fits an environment configuration.
pub fn check_compatible(artifact: &PolicyArtifact, env: &EnvConfig, dual: &DualParams) -> Result<()> {
    let m = &artifact.meta;
    let actions = crate::env::ActionSpace::new(env.action_mode).cardinality();
    let mut problems = Vec::new();
    if m.action_mode != env.action_mode {
        problems.push(format!(
            "action mode {} vs configured {}",
            m.action_mode.label(),
            env.action_mode.label()
        ));
    }
    if m.observation_dim != env.observation_dim() {
        problems.push(format!(
            "observation dimension {} vs configured {}",
            m.observation_dim,
            env.observation_dim()
        ));
    }
    if m.action_count != actions {
        problems.push(format!("{} actions vs configured {actions}", m.action_count));
    }
    if m.lambda_max != dual.lambda_max {
        problems.push(format!(
            "lambda_max {} vs configured {}",
            m.lambda_max, dual.lambda_max
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "policy does not fit the configuration: {}",
            problems.join("; ")
        )))
    }
}

/// Greedy rollout of a trained policy with online dual updates and no learning.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    artifact: &PolicyArtifact,
    env_config: &EnvConfig,
    dual: &DualParams,
    shaping: CostShaping,
    episodes: u32,
    seed: u64,
    lambda0: f64,
    mut sink: impl FnMut(&StepRecord) -> Result<()>,
) -> Result<()> {
    check_compatible(artifact, env_config, dual)?;
    let mut env = Env::new(env_config.clone(), dual.clone(), shaping, seed)?;
    let mut global = 0;
    for episode in 0..episodes {
        let lambda = if episode == 0 { lambda0 } else { env.dual().lambda };
        let mut obs = start_episode(&mut env, episode, seed, lambda);
        loop {
            let action = argmax(&artifact.net.forward_one(&obs));
            let r = env.step(action)?;
            global += 1;
            sink(&StepRecord::from_step(
                episode,
                global,
                Some(action),
                0.0,
                &r,
                env.dual().v_ema,
                None,
            ))?;
            obs = r.observation;
            if r.done {
                break;
            }
        }
    }
    Ok(())
}

/// Rollout with the configured static parameters: no actions, no learning.
pub fn run_fixed(
    env_config: &EnvConfig,
    dual: &DualParams,
    shaping: CostShaping,
    episodes: u32,
    seed: u64,
    mut sink: impl FnMut(&StepRecord) -> Result<()>,
) -> Result<()> {
    let mut env = Env::new(env_config.clone(), dual.clone(), shaping, seed)?;
    let mut global = 0;
    for episode in 0..episodes {
        let lambda = if episode == 0 { 0.0 } else { env.dual().lambda };
        start_episode(&mut env, episode, seed, lambda);
        loop {
            let r = env.step_fixed()?;
            global += 1;
            sink(&StepRecord::from_step(
                episode,
                global,
                None,
                0.0,
                &r,
                env.dual().v_ema,
                None,
            ))?;
            if r.done {
                break;
            }
        }
    }
    Ok(())
}
