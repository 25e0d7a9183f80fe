use rand::Rng;

use super::checkpoint::Checkpoint;
use super::exploration::{argmax, sample_categorical};
use super::{check_obs, AgentKind, Batch, EvalMode, Hyperparams, TargetMode};
use crate::error::{Error, Result};
use crate::nn::{mse_loss, Activation, AdamConfig, ForwardCache, Matrix, Network, NetworkSpec};
use crate::replay::{ProbabilityVector, Transition};

/// `Q(s, p)`: a state embedding concatenated with `p`, then a head network
/// ending in one linear unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub embed: Network,
    pub head: Network,
}

#[derive(Debug, Clone, Default)]
pub struct CriticCache {
    embed: ForwardCache,
    head: ForwardCache,
}

impl Critic {
    pub fn specs(obs_dim: usize, action_count: usize, hp: &Hyperparams) -> Result<(NetworkSpec, NetworkSpec)> {
        let embed_layers: Vec<_> = hp.critic_embed.iter().map(|l| l.as_pair()).collect();
        let embed = NetworkSpec::new(obs_dim, &embed_layers)?;
        let mut head_layers: Vec<_> = hp.critic_head.iter().map(|l| l.as_pair()).collect();
        head_layers.push((1, Activation::Linear));
        let head = NetworkSpec::new(embed.output_dim() + action_count, &head_layers)?;
        Ok((embed, head))
    }

    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_count: usize, hp: &Hyperparams, rng: &mut R) -> Result<Self> {
        let (embed, head) = Self::specs(obs_dim, action_count, hp)?;
        Ok(Self {
            embed: Network::new(embed, rng)?,
            head: Network::new(head, rng)?,
        })
    }

    pub fn from_networks(embed: Network, head: Network) -> Result<Self> {
        if head.input_dim() <= embed.output_dim() || head.output_dim() != 1 {
            return Err(Error::Dimension(format!(
                "critic head {}→{} does not fit embedding width {}",
                head.input_dim(),
                head.output_dim(),
                embed.output_dim()
            )));
        }
        Ok(Self { embed, head })
    }

    pub fn obs_dim(&self) -> usize {
        self.embed.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.head.input_dim() - self.embed.output_dim()
    }

    fn check_probs(&self, states: &Matrix, probs: &Matrix) -> Result<()> {
        if probs.cols() != self.action_count() || probs.rows() != states.rows() {
            return Err(Error::Dimension(format!(
                "critic expects {}×{} probabilities, got {:?}",
                states.rows(),
                self.action_count(),
                probs.shape()
            )));
        }
        Ok(())
    }

    pub fn predict(&self, states: &Matrix, probs: &Matrix) -> Result<Matrix> {
        self.check_probs(states, probs)?;
        let h = self.embed.predict(states)?;
        self.head.predict(&h.hcat(probs)?)
    }

    pub fn forward(&self, states: &Matrix, probs: &Matrix) -> Result<(Matrix, CriticCache)> {
        self.check_probs(states, probs)?;
        let (h, embed) = self.embed.forward(states)?;
        let (q, head) = self.head.forward(&h.hcat(probs)?)?;
        Ok((q, CriticCache { embed, head }))
    }

    /// Accumulates parameter gradients of `Σ q ⊙ grad`; returns `d/dp`.
    pub fn backward(&mut self, cache: &CriticCache, grad: &Matrix) -> Result<Matrix> {
        let g = self.head.backward(&cache.head, grad)?;
        let (g_embed, g_p) = g.hsplit(self.embed.output_dim());
        self.embed.backward(&cache.embed, &g_embed)?;
        Ok(g_p)
    }

    /// `d(Σ q ⊙ grad)/dp` without touching parameter gradients.
    pub fn backward_probs(&self, cache: &CriticCache, grad: &Matrix) -> Result<Matrix> {
        let g = self.head.backward_input(&cache.head, grad)?;
        Ok(g.hsplit(self.embed.output_dim()).1)
    }

    pub fn zero_grad(&mut self) {
        self.embed.zero_grad();
        self.head.zero_grad();
    }

    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        self.embed.adam_step(cfg);
        self.head.adam_step(cfg);
    }

    pub fn param_count(&self) -> usize {
        self.embed.param_count() + self.head.param_count()
    }

    pub fn copy_from(&mut self, other: &Critic) {
        self.embed.copy_from(&other.embed);
        self.head.copy_from(&other.head);
    }

    pub fn blend_from(&mut self, other: &Critic, tau: f64) {
        self.embed.blend_from(&other.embed, tau);
        self.head.blend_from(&other.head, tau);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsadpgStats {
    pub critic_loss: f64,
    /// Mean `Q(s_i, μ(s_i))` over the batch, before the actor update.
    pub actor_objective: f64,
}

/// Deterministic policy gradient over probability vectors.
///
/// The actor maps a state to a point on the action simplex. The critic scores
/// `(s, p)` pairs and is trained on the one-hot vectors of the actions that
/// were actually taken; the actor ascends `Q(s, μ(s))` by backpropagating
/// through the critic's `p` input.
#[derive(Debug, Clone)]
pub struct PsadpgAgent {
    pub actor: Network,
    pub critic: Critic,
    pub target_actor: Network,
    pub target_critic: Critic,
    pub hp: Hyperparams,
    /// Training steps taken so far.
    pub updates: u64,
}

impl PsadpgAgent {
    pub fn actor_spec(obs_dim: usize, action_count: usize, hp: &Hyperparams) -> Result<NetworkSpec> {
        let mut layers: Vec<_> = hp.actor_hidden.iter().map(|l| l.as_pair()).collect();
        layers.push((action_count, Activation::Softmax));
        NetworkSpec::new(obs_dim, &layers)
    }

    /// Fresh agent whose initial policy is exactly uniform; targets start as
    /// copies of the online networks.
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_count: usize,
        hp: Hyperparams,
        actor_rng: &mut R,
        critic_rng: &mut R,
    ) -> Result<Self> {
        hp.validate()?;
        if action_count == 0 {
            return Err(Error::InvalidArgument("need at least one action".into()));
        }
        let mut actor = Network::new(Self::actor_spec(obs_dim, action_count, &hp)?, actor_rng)?;
        actor.zero_final_layer();
        let critic = Critic::new(obs_dim, action_count, &hp, critic_rng)?;
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            hp,
            updates: 0,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn actor_probabilities(&self, obs: &[f64]) -> Result<ProbabilityVector> {
        let x = check_obs(obs, self.obs_dim())?;
        let p = self.actor.predict(&x)?;
        if !p.is_finite() {
            return Err(Error::Divergence("actor produced non-finite probabilities".into()));
        }
        ProbabilityVector::new(p.into_vec())
    }

    pub fn eval_action<R: Rng + ?Sized>(&self, obs: &[f64], mode: EvalMode, rng: &mut R) -> Result<usize> {
        let p = self.actor_probabilities(obs)?;
        Ok(match mode {
            EvalMode::Sample => sample_categorical(p.as_slice(), rng),
            EvalMode::Argmax => argmax(p.as_slice()),
        })
    }

    /// Bootstrap targets `r + γ Q'(s', μ'(s'))`, with `y = r` at termination.
    pub fn critic_targets(&self, batch: &Batch) -> Result<Matrix> {
        let next_p = self.target_actor.predict(&batch.next_states)?;
        let next_q = self.target_critic.predict(&batch.next_states, &next_p)?;
        batch.targets(self.hp.gamma, next_q.data())
    }

    /// One Adam step on the critic towards fixed `targets`; returns the loss
    /// before the step.
    pub fn critic_step(&mut self, states: &Matrix, probs: &Matrix, targets: &Matrix) -> Result<f64> {
        let (q, cache) = self.critic.forward(states, probs)?;
        let (loss, grad) = mse_loss(&q, targets)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("critic loss is {loss}")));
        }
        self.critic.zero_grad();
        self.critic.backward(&cache, &grad)?;
        self.critic.adam_step(&self.hp.adam());
        Ok(loss)
    }

    /// `J = mean_i Q(s_i, μ(s_i))`.
    pub fn actor_objective(&self, states: &Matrix) -> Result<f64> {
        let p = self.actor.predict(states)?;
        let q = self.critic.predict(states, &p)?;
        Ok(q.data().iter().sum::<f64>() / q.rows() as f64)
    }

    /// Writes `scale · dJ/dθ_μ` into the actor's (zeroed) gradients and
    /// returns `J`. Critic parameter gradients are left alone.
    pub fn actor_objective_gradient(&mut self, states: &Matrix, scale: f64) -> Result<f64> {
        let (p, actor_cache) = self.actor.forward(states)?;
        let (q, critic_cache) = self.critic.forward(states, &p)?;
        let n = q.rows() as f64;
        let objective = q.data().iter().sum::<f64>() / n;
        let dq = Matrix::filled(q.rows(), 1, scale / n);
        let dp = self.critic.backward_probs(&critic_cache, &dq)?;
        self.actor.zero_grad();
        self.actor.backward(&actor_cache, &dp)?;
        Ok(objective)
    }

    /// One Adam ascent step on `J`; returns `J` before the step.
    pub fn actor_step(&mut self, states: &Matrix) -> Result<f64> {
        let objective = self.actor_objective_gradient(states, -1.0)?;
        if !objective.is_finite() {
            return Err(Error::Divergence(format!("actor objective is {objective}")));
        }
        self.actor.adam_step(&self.hp.adam());
        Ok(objective)
    }

    /// Critic update followed by actor update on one minibatch. Target
    /// networks are not touched.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<PsadpgStats> {
        if batch.len() != self.hp.batch_size {
            return Err(Error::InvalidArgument(format!(
                "minibatch has {} transitions, batch_size is {}",
                batch.len(),
                self.hp.batch_size
            )));
        }
        let b = Batch::new(batch, self.obs_dim(), self.action_count())?;
        let targets = self.critic_targets(&b)?;
        let critic_loss = self.critic_step(&b.states, &b.probs, &targets)?;
        let actor_objective = self.actor_step(&b.states)?;
        self.updates += 1;
        Ok(PsadpgStats {
            critic_loss,
            actor_objective,
        })
    }

    pub fn target_update(&mut self, mode: TargetMode) {
        match mode {
            TargetMode::Hard => {
                self.target_actor.copy_from(&self.actor);
                self.target_critic.copy_from(&self.critic);
            }
            TargetMode::Soft => {
                self.target_actor.blend_from(&self.actor, self.hp.tau);
                self.target_critic.blend_from(&self.critic, self.hp.tau);
            }
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            AgentKind::Psadpg,
            self.obs_dim(),
            self.action_count(),
            self.hp.clone(),
            vec![
                ("actor".into(), self.actor.clone()),
                ("critic_embed".into(), self.critic.embed.clone()),
                ("critic_head".into(), self.critic.head.clone()),
                ("target_actor".into(), self.target_actor.clone()),
                ("target_critic_embed".into(), self.target_critic.embed.clone()),
                ("target_critic_head".into(), self.target_critic.head.clone()),
            ],
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.agent != AgentKind::Psadpg {
            return Err(Error::InvalidArgument("checkpoint does not hold a PSADPG agent".into()));
        }
        let agent = Self {
            actor: ckpt.network("actor")?.clone(),
            critic: Critic::from_networks(ckpt.network("critic_embed")?.clone(), ckpt.network("critic_head")?.clone())?,
            target_actor: ckpt.network("target_actor")?.clone(),
            target_critic: Critic::from_networks(
                ckpt.network("target_critic_embed")?.clone(),
                ckpt.network("target_critic_head")?.clone(),
            )?,
            hp: ckpt.hyperparams.clone(),
            updates: 0,
        };
        if agent.obs_dim() != ckpt.obs_dim
            || agent.action_count() != ckpt.action_count
            || agent.critic.obs_dim() != ckpt.obs_dim
            || agent.critic.action_count() != ckpt.action_count
            || agent.target_actor.spec() != agent.actor.spec()
            || agent.target_critic.embed.spec() != agent.critic.embed.spec()
            || agent.target_critic.head.spec() != agent.critic.head.spec()
        {
            return Err(Error::Dimension("checkpoint networks do not fit together".into()));
        }
        Ok(agent)
    }
}
