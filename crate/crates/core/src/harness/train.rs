use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{EnvChoice, RunConfig};
use super::curve::{curve_from_rewards, emit_curve, CurvePoint};
use super::rng::{derive_rng_streams, rng_stream, StreamRng, RNG_DESCRIPTION, STREAM_EVAL, STREAM_EVAL_ENV};
use crate::agents::{epsilon_at, Agent, Checkpoint, TargetMode, TrainStats};
use crate::envs::{tabular_env, Acrobot, Environment};
use crate::error::{Error, Result};
use crate::replay::{one_hot, ReplayBuffer, Transition};
use crate::theorem::TabularMdp;

pub const CURVE_FILE: &str = "curve.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const METADATA_FILE: &str = "metadata.json";

const ACROBOT_SEMANTICS: &str = "Acrobot-v1 (Gym book dynamics): torque = action - 1, RK4 over dt = 0.2, \
unit masses and lengths, |dθ1| <= 4π, |dθ2| <= 9π, angles wrapped to [-π, π), \
terminates when -cos θ1 - cos(θ1 + θ2) > 1, reward -1 per step and 0 on the terminating step, \
500-step truncation, no torque noise";

/// Builds the environment a config names, seeded from `rng`.
pub fn make_env(cfg: &RunConfig, rng: StreamRng) -> Result<Box<dyn Environment>> {
    Ok(match cfg.env_choice()? {
        EnvChoice::Acrobot => Box::new(Acrobot::new(rng)),
        EnvChoice::Tabular(path) => {
            let mdp = TabularMdp::load(&path)?;
            Box::new(tabular_env(mdp, cfg.horizon, rng)?)
        }
    })
}

/// What the training loop reports after every environment step.
pub struct StepInfo<'a> {
    pub episode: usize,
    /// Environment steps so far, including this one.
    pub global_step: u64,
    pub epsilon: f64,
    pub agent: &'a Agent,
    pub buffer: &'a ReplayBuffer,
    pub stats: Option<TrainStats>,
    pub hard_target_update: bool,
}

/// Hooks into [`train`]; both methods default to doing nothing.
pub trait TrainingObserver {
    fn on_step(&mut self, _info: &StepInfo<'_>) {}
    fn on_episode(&mut self, _point: &CurvePoint) {}
}

impl TrainingObserver for () {}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: Vec<CurvePoint>,
    pub agent: Agent,
    pub total_steps: u64,
}

/// Runs the configured agent for `cfg.episodes` episodes.
///
/// Each step: pick `a ~ (1-ε) μ(s) + ε U` (or ε-greedy on Q for DQN), store
/// the transition with the one-hot of `a`, and once the buffer holds
/// `max(learning_starts, batch_size)` transitions take one training step on
/// a fresh minibatch. Hard target copies happen every
/// `target_update_period` environment steps; soft updates follow every
/// training step.
pub fn train(cfg: &RunConfig, observer: &mut dyn TrainingObserver) -> Result<TrainOutcome> {
    cfg.validate()?;
    let hp = cfg.hyperparams.clone();
    let mut streams = derive_rng_streams(cfg.seed);
    let mut env = make_env(cfg, streams.env.clone())?;
    let k = env.action_count();
    let mut agent = Agent::new(
        cfg.agent,
        env.obs_dim(),
        k,
        hp.clone(),
        &mut streams.actor_init,
        &mut streams.critic_init,
    )?;
    let mut buffer = ReplayBuffer::new(hp.buffer_capacity, env.obs_dim(), k)?;
    let warmup = hp.learning_starts.max(hp.batch_size);

    let mut rewards = Vec::with_capacity(cfg.episodes);
    let mut global_step: u64 = 0;
    for episode in 1..=cfg.episodes {
        let mut obs = env.reset();
        let mut total = 0.0;
        loop {
            let epsilon = epsilon_at(&hp, global_step);
            let action = agent.explore_action(&obs, epsilon, &mut streams.sampling)?;
            let step = env.step(action)?;
            total += step.reward;
            let over = step.episode_over();
            buffer.push(Transition {
                state: obs,
                surrogate_action: one_hot(action, k)?,
                reward: step.reward,
                next_state: step.observation.clone(),
                done: step.done,
            })?;
            global_step += 1;

            let mut stats = None;
            if buffer.len() >= warmup {
                let batch = buffer
                    .sample(hp.batch_size, &mut streams.replay)
                    .expect("buffer holds a full minibatch");
                let s = agent.train_step(&batch).map_err(|e| match e {
                    Error::Divergence(m) => Error::Divergence(format!("episode {episode}, step {global_step}: {m}")),
                    e => e,
                })?;
                if !s.critic_loss.is_finite() || s.actor_objective.is_some_and(|j| !j.is_finite()) {
                    return Err(Error::Divergence(format!(
                        "episode {episode}, step {global_step}: loss {} objective {:?}",
                        s.critic_loss, s.actor_objective
                    )));
                }
                if hp.target_mode == TargetMode::Soft {
                    agent.target_update(TargetMode::Soft);
                }
                stats = Some(s);
            }
            let hard = hp.target_mode == TargetMode::Hard && global_step.is_multiple_of(hp.target_update_period as u64);
            if hard {
                agent.target_update(TargetMode::Hard);
            }
            observer.on_step(&StepInfo {
                episode,
                global_step,
                epsilon,
                agent: &agent,
                buffer: &buffer,
                stats,
                hard_target_update: hard,
            });

            obs = step.observation;
            if over {
                break;
            }
        }
        rewards.push(total);
        let recent = &rewards[rewards.len().saturating_sub(100)..];
        let mean100 = recent.iter().sum::<f64>() / recent.len() as f64;
        observer.on_episode(&CurvePoint {
            episode,
            reward: total,
            mean100,
        });
    }
    Ok(TrainOutcome {
        curve: curve_from_rewards(&rewards),
        agent,
        total_steps: global_step,
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    package: &'static str,
    version: &'static str,
    seed: u64,
    rng: &'static str,
    environment: String,
    episodes: usize,
    total_steps: u64,
    final_mean100: Option<f64>,
    config: &'a RunConfig,
}

fn env_semantics(cfg: &RunConfig) -> Result<String> {
    Ok(match cfg.env_choice()? {
        EnvChoice::Acrobot => ACROBOT_SEMANTICS.to_string(),
        EnvChoice::Tabular(p) => format!(
            "tabular MDP from {}: one-hot observations, episode ends on entering an absorbing state or after {} steps",
            p.display(),
            cfg.horizon
        ),
    })
}

/// Paths of the artifacts [`run_training`] writes.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub curve: PathBuf,
    pub checkpoint: PathBuf,
    pub metadata: PathBuf,
}

/// [`train`], then writes the curve CSV, the final checkpoint and a JSON
/// metadata sidecar into `cfg.output_path`. Every byte is a function of the
/// config alone.
pub fn run_training(
    cfg: &RunConfig,
    observer: &mut dyn TrainingObserver,
) -> Result<(TrainOutcome, RunArtifacts)> {
    let outcome = train(cfg, observer)?;
    let dir = &cfg.output_path;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let artifacts = RunArtifacts {
        curve: dir.join(CURVE_FILE),
        checkpoint: dir.join(CHECKPOINT_FILE),
        metadata: dir.join(METADATA_FILE),
    };
    emit_curve(&outcome.curve, &artifacts.curve)?;
    outcome.agent.checkpoint().save(&artifacts.checkpoint)?;
    let meta = Metadata {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        rng: RNG_DESCRIPTION,
        environment: env_semantics(cfg)?,
        episodes: cfg.episodes,
        total_steps: outcome.total_steps,
        final_mean100: outcome.curve.last().map(|p| p.mean100),
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    fs::write(&artifacts.metadata, text).map_err(|e| Error::io(&artifacts.metadata, e))?;
    Ok((outcome, artifacts))
}

/// Runs `cfg.eval_episodes` episodes with evaluation-time action selection
/// and no learning; returns the episode returns.
pub fn evaluate(cfg: &RunConfig, checkpoint: &Path) -> Result<Vec<f64>> {
    cfg.validate()?;
    let agent = Agent::from_checkpoint(&Checkpoint::load(checkpoint)?)?;
    let mut env = make_env(cfg, rng_stream(cfg.seed, STREAM_EVAL_ENV))?;
    let mut rng = rng_stream(cfg.seed, STREAM_EVAL);
    let ckpt_dims = (agent.checkpoint().obs_dim, agent.checkpoint().action_count);
    if ckpt_dims != (env.obs_dim(), env.action_count()) {
        return Err(Error::Config(format!(
            "checkpoint is for {}-dim observations and {} actions; env has {} and {}",
            ckpt_dims.0,
            ckpt_dims.1,
            env.obs_dim(),
            env.action_count()
        )));
    }
    (0..cfg.eval_episodes)
        .map(|_| {
            let mut obs = env.reset();
            let mut total = 0.0;
            loop {
                let a = agent.eval_action(&obs, cfg.eval_mode, &mut rng)?;
                let step = env.step(a)?;
                total += step.reward;
                if step.episode_over() {
                    return Ok(total);
                }
                obs = step.observation;
            }
        })
        .collect()
}
