use rand::Rng;

use super::checkpoint::Checkpoint;
use super::exploration::argmax;
use super::{check_obs, AgentKind, Batch, Hyperparams, TargetMode};
use crate::error::{Error, Result};
use crate::nn::{mse_loss, Activation, Matrix, Network, NetworkSpec};
use crate::replay::Transition;

/// Q-learning baseline with a target network and ε-greedy exploration.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub q_net: Network,
    pub target_q_net: Network,
    pub hp: Hyperparams,
    pub updates: u64,
}

impl DqnAgent {
    pub fn q_spec(obs_dim: usize, action_count: usize, hp: &Hyperparams) -> Result<NetworkSpec> {
        let mut layers: Vec<_> = hp.q_hidden.iter().map(|l| l.as_pair()).collect();
        layers.push((action_count, Activation::Linear));
        NetworkSpec::new(obs_dim, &layers)
    }

    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_count: usize, hp: Hyperparams, rng: &mut R) -> Result<Self> {
        hp.validate()?;
        if action_count == 0 {
            return Err(Error::InvalidArgument("need at least one action".into()));
        }
        let q_net = Network::new(Self::q_spec(obs_dim, action_count, &hp)?, rng)?;
        Ok(Self {
            target_q_net: q_net.clone(),
            q_net,
            hp,
            updates: 0,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.q_net.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.q_net.output_dim()
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let q = self.q_net.predict(&check_obs(obs, self.obs_dim())?)?;
        if !q.is_finite() {
            return Err(Error::Divergence("Q-network produced non-finite values".into()));
        }
        Ok(q.into_vec())
    }

    pub fn act_greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(obs)?))
    }

    pub fn epsilon_greedy<R: Rng + ?Sized>(&self, obs: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        if rng.gen::<f64>() < epsilon {
            Ok(rng.gen_range(0..self.action_count()))
        } else {
            self.act_greedy(obs)
        }
    }

    /// `r + γ max_a Q'(s', a)`, with `y = r` at termination.
    pub fn targets(&self, batch: &Batch) -> Result<Matrix> {
        let next_q = self.target_q_net.predict(&batch.next_states)?;
        let best: Vec<f64> = (0..next_q.rows())
            .map(|r| next_q.row(r).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        batch.targets(self.hp.gamma, &best)
    }

    /// Writes `dL/dθ` into the (zeroed) Q-network gradients, where `L` is the
    /// mean squared TD error of `Q(s, ·)·p̂` against `targets`. Returns `L`.
    pub fn loss_gradient(&mut self, states: &Matrix, probs: &Matrix, targets: &Matrix) -> Result<f64> {
        let (q, cache) = self.q_net.forward(states)?;
        if probs.shape() != q.shape() {
            return Err(Error::Dimension(format!(
                "action vectors {:?} vs Q-values {:?}",
                probs.shape(),
                q.shape()
            )));
        }
        let taken: Vec<f64> = (0..q.rows())
            .map(|r| q.row(r).iter().zip(probs.row(r)).map(|(a, b)| a * b).sum())
            .collect();
        let (loss, g) = mse_loss(&Matrix::from_vec(q.rows(), 1, taken)?, targets)?;
        let mut dq = probs.clone();
        for r in 0..dq.rows() {
            let gr = g.get(r, 0);
            dq.row_mut(r).iter_mut().for_each(|v| *v *= gr);
        }
        self.q_net.zero_grad();
        self.q_net.backward(&cache, &dq)?;
        Ok(loss)
    }

    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.len() != self.hp.batch_size {
            return Err(Error::InvalidArgument(format!(
                "minibatch has {} transitions, batch_size is {}",
                batch.len(),
                self.hp.batch_size
            )));
        }
        let b = Batch::new(batch, self.obs_dim(), self.action_count())?;
        let targets = self.targets(&b)?;
        let loss = self.loss_gradient(&b.states, &b.probs, &targets)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("Q loss is {loss}")));
        }
        self.q_net.adam_step(&self.hp.adam());
        self.updates += 1;
        Ok(loss)
    }

    pub fn target_update(&mut self, mode: TargetMode) {
        match mode {
            TargetMode::Hard => self.target_q_net.copy_from(&self.q_net),
            TargetMode::Soft => self.target_q_net.blend_from(&self.q_net, self.hp.tau),
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            AgentKind::Dqn,
            self.obs_dim(),
            self.action_count(),
            self.hp.clone(),
            vec![
                ("q_net".into(), self.q_net.clone()),
                ("target_q_net".into(), self.target_q_net.clone()),
            ],
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.agent != AgentKind::Dqn {
            return Err(Error::InvalidArgument("checkpoint does not hold a DQN agent".into()));
        }
        let agent = Self {
            q_net: ckpt.network("q_net")?.clone(),
            target_q_net: ckpt.network("target_q_net")?.clone(),
            hp: ckpt.hyperparams.clone(),
            updates: 0,
        };
        if agent.obs_dim() != ckpt.obs_dim
            || agent.action_count() != ckpt.action_count
            || agent.q_net.spec() != agent.target_q_net.spec()
        {
            return Err(Error::Dimension("checkpoint networks do not fit together".into()));
        }
        Ok(agent)
    }
}
