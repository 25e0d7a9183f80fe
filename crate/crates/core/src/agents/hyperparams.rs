use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Psadpg,
    Dqn,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Psadpg => "psadpg",
            AgentKind::Dqn => "dqn",
        }
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psadpg" => Ok(AgentKind::Psadpg),
            "dqn" => Ok(AgentKind::Dqn),
            other => Err(Error::Config(format!("unknown agent `{other}` (expected psadpg or dqn)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// Copy online weights every `target_update_period` environment steps.
    Hard,
    /// Blend `θ' ← τθ + (1-τ)θ'` after every training step.
    Soft,
}

/// How PSADPG picks actions at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Sample,
    Argmax,
}

/// A hidden layer written as `"<units>:<activation>"`, e.g. `"64:tanh"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LayerDecl {
    pub units: usize,
    pub activation: Activation,
}

impl LayerDecl {
    pub const fn new(units: usize, activation: Activation) -> Self {
        Self { units, activation }
    }

    pub(crate) fn as_pair(self) -> (usize, Activation) {
        (self.units, self.activation)
    }
}

impl TryFrom<String> for LayerDecl {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        let (units, act) = s
            .split_once(':')
            .ok_or_else(|| format!("layer `{s}` must look like `64:tanh`"))?;
        let units: usize = units
            .trim()
            .parse()
            .map_err(|_| format!("layer `{s}` has a bad unit count"))?;
        let activation = Activation::parse(act.trim())
            .ok_or_else(|| format!("layer `{s}` has unknown activation `{act}`"))?;
        if units == 0 || activation == Activation::Softmax {
            return Err(format!("layer `{s}` is not a valid hidden layer"));
        }
        Ok(Self { units, activation })
    }
}

impl From<LayerDecl> for String {
    fn from(l: LayerDecl) -> String {
        l.to_string()
    }
}

impl fmt::Display for LayerDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.units, self.activation.name())
    }
}

/// Training hyperparameters. Defaults are the classic-control settings:
/// Adam at 5e-4, γ = 1, hard target copy every 1000 steps, and ε decaying
/// linearly from 1 to 0.02 over the first 100 000 steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub gamma: f64,
    pub target_update_period: usize,
    pub target_mode: TargetMode,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Transitions collected before the first training step.
    pub learning_starts: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_horizon: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Actor hidden layers; a softmax layer over the actions follows.
    pub actor_hidden: Vec<LayerDecl>,
    /// Critic state embedding.
    pub critic_embed: Vec<LayerDecl>,
    /// Critic layers over `[embedding | p]`; a linear scalar output follows.
    pub critic_head: Vec<LayerDecl>,
    /// DQN hidden layers; a linear layer over the actions follows.
    pub q_hidden: Vec<LayerDecl>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        use Activation::{Linear, Tanh};
        Self {
            learning_rate: 0.0005,
            gamma: 1.0,
            target_update_period: 1000,
            target_mode: TargetMode::Hard,
            tau: 0.005,
            batch_size: 32,
            buffer_capacity: 50_000,
            learning_starts: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.02,
            epsilon_horizon: 100_000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            actor_hidden: vec![LayerDecl::new(64, Tanh)],
            critic_embed: vec![LayerDecl::new(64, Tanh)],
            critic_head: vec![LayerDecl::new(64, Linear), LayerDecl::new(64, Tanh)],
            q_hidden: vec![LayerDecl::new(64, Tanh)],
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if self.target_update_period == 0 || self.batch_size == 0 {
            return bad("target_update_period and batch_size must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must hold at least one minibatch".into());
        }
        for (name, e) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("{name} must lie in [0, 1], got {e}"));
            }
        }
        if self.epsilon_end > self.epsilon_start {
            return bad("epsilon_end must not exceed epsilon_start".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and adam_eps must be positive".into());
        }
        if self.critic_embed.is_empty() {
            return bad("critic_embed needs at least one layer".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> crate::nn::AdamConfig {
        crate::nn::AdamConfig {
            lr: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_decl_parsing() {
        let l = LayerDecl::try_from("64:tanh".to_string()).unwrap();
        assert_eq!(l, LayerDecl::new(64, Activation::Tanh));
        assert_eq!(l.to_string(), "64:tanh");
        assert!(LayerDecl::try_from("64".to_string()).is_err());
        assert!(LayerDecl::try_from("0:relu".to_string()).is_err());
        assert!(LayerDecl::try_from("8:softmax".to_string()).is_err());
        assert!(LayerDecl::try_from("8:gelu".to_string()).is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let hp = Hyperparams::default();
        hp.validate().unwrap();
        assert_eq!(hp.learning_rate, 0.0005);
        assert_eq!(hp.gamma, 1.0);
        assert_eq!(hp.target_update_period, 1000);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut hp = Hyperparams { gamma: 1.5, ..Hyperparams::default() };
        assert!(hp.validate().is_err());
        hp.gamma = 0.9;
        hp.epsilon_end = 1.0;
        hp.epsilon_start = 0.5;
        assert!(hp.validate().is_err());
        hp.epsilon_start = 1.0;
        hp.learning_rate = 0.0;
        assert!(hp.validate().is_err());
    }
}
