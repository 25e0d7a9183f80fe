//! The PSADPG actor-critic and the DQN baseline.
//!
//! Both agents store transitions with one-hot surrogate actions, share the
//! same hyperparameters and exploration schedule, and are driven by the
//! training loop in [`crate::harness`].

mod checkpoint;
mod dqn;
mod exploration;
mod hyperparams;
mod psadpg;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use dqn::DqnAgent;
pub use exploration::{argmax, epsilon_at, sample_action, sample_categorical};
pub use hyperparams::{AgentKind, EvalMode, Hyperparams, LayerDecl, TargetMode};
pub use psadpg::{Critic, CriticCache, PsadpgAgent, PsadpgStats};

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::replay::Transition;

/// Either agent behind one interface for the training loop.
#[derive(Debug, Clone)]
pub enum Agent {
    Psadpg(PsadpgAgent),
    Dqn(DqnAgent),
}

/// Loss values from one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean `Q(s, μ(s))` before the actor update; `None` for DQN.
    pub actor_objective: Option<f64>,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        kind: AgentKind,
        obs_dim: usize,
        action_count: usize,
        hp: Hyperparams,
        actor_rng: &mut R,
        critic_rng: &mut R,
    ) -> Result<Self> {
        Ok(match kind {
            AgentKind::Psadpg => {
                Agent::Psadpg(PsadpgAgent::new(obs_dim, action_count, hp, actor_rng, critic_rng)?)
            }
            AgentKind::Dqn => Agent::Dqn(DqnAgent::new(obs_dim, action_count, hp, critic_rng)?),
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Psadpg(_) => AgentKind::Psadpg,
            Agent::Dqn(_) => AgentKind::Dqn,
        }
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        match self {
            Agent::Psadpg(a) => &a.hp,
            Agent::Dqn(a) => &a.hp,
        }
    }

    /// Behaviour action during training.
    pub fn explore_action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<usize> {
        match self {
            Agent::Psadpg(a) => {
                let p = a.actor_probabilities(obs)?;
                Ok(sample_action(&p, epsilon, rng))
            }
            Agent::Dqn(a) => a.epsilon_greedy(obs, epsilon, rng),
        }
    }

    pub fn eval_action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        mode: EvalMode,
        rng: &mut R,
    ) -> Result<usize> {
        match self {
            Agent::Psadpg(a) => a.eval_action(obs, mode, rng),
            Agent::Dqn(a) => a.act_greedy(obs),
        }
    }

    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<TrainStats> {
        match self {
            Agent::Psadpg(a) => {
                let s = a.train_step(batch)?;
                Ok(TrainStats {
                    critic_loss: s.critic_loss,
                    actor_objective: Some(s.actor_objective),
                })
            }
            Agent::Dqn(a) => Ok(TrainStats {
                critic_loss: a.train_step(batch)?,
                actor_objective: None,
            }),
        }
    }

    pub fn target_update(&mut self, mode: TargetMode) {
        match self {
            Agent::Psadpg(a) => a.target_update(mode),
            Agent::Dqn(a) => a.target_update(mode),
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        match self {
            Agent::Psadpg(a) => a.checkpoint(),
            Agent::Dqn(a) => a.checkpoint(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        match ckpt.agent {
            AgentKind::Psadpg => Ok(Agent::Psadpg(PsadpgAgent::from_checkpoint(ckpt)?)),
            AgentKind::Dqn => Ok(Agent::Dqn(DqnAgent::from_checkpoint(ckpt)?)),
        }
    }
}

/// Row-stacked views of a minibatch.
pub struct Batch {
    pub states: Matrix,
    pub probs: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    pub done: Vec<bool>,
}

impl Batch {
    pub fn new(batch: &[&Transition], obs_dim: usize, action_count: usize) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty minibatch".into()));
        }
        let n = batch.len();
        let mut states = Vec::with_capacity(n * obs_dim);
        let mut next_states = Vec::with_capacity(n * obs_dim);
        let mut probs = Vec::with_capacity(n * action_count);
        for t in batch {
            if t.state.len() != obs_dim || t.next_state.len() != obs_dim {
                return Err(Error::Dimension(format!(
                    "transition state length {} / {}, expected {obs_dim}",
                    t.state.len(),
                    t.next_state.len()
                )));
            }
            if t.surrogate_action.len() != action_count {
                return Err(Error::Dimension(format!(
                    "surrogate action length {}, expected {action_count}",
                    t.surrogate_action.len()
                )));
            }
            states.extend_from_slice(&t.state);
            next_states.extend_from_slice(&t.next_state);
            probs.extend_from_slice(t.surrogate_action.as_slice());
        }
        Ok(Self {
            states: Matrix::from_vec(n, obs_dim, states)?,
            probs: Matrix::from_vec(n, action_count, probs)?,
            rewards: batch.iter().map(|t| t.reward).collect(),
            next_states: Matrix::from_vec(n, obs_dim, next_states)?,
            done: batch.iter().map(|t| t.done).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    /// `y_i = r_i + γ (1 - done_i) bootstrap_i`.
    pub fn targets(&self, gamma: f64, bootstrap: &[f64]) -> Result<Matrix> {
        let y = self
            .rewards
            .iter()
            .zip(&self.done)
            .zip(bootstrap)
            .map(|((r, d), b)| if *d { *r } else { r + gamma * b })
            .collect();
        Matrix::from_vec(self.len(), 1, y)
            .map_err(|_| Error::Divergence("non-finite bootstrap target".into()))
    }
}

pub(crate) fn check_obs(obs: &[f64], obs_dim: usize) -> Result<Matrix> {
    if obs.len() != obs_dim {
        return Err(Error::Dimension(format!(
            "observation has {} features, expected {obs_dim}",
            obs.len()
        )));
    }
    Matrix::row_vector(obs)
}
