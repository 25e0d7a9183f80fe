//! Episodic environments behind one interface.

mod acrobot;
mod tabular;

pub use acrobot::{Acrobot, AcrobotState, ACROBOT_MAX_STEPS};
pub use tabular::{tabular_env, TabularEnv};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// True termination; the next state has no future value.
    pub done: bool,
    /// The step limit cut the episode short.
    pub truncated: bool,
}

impl StepResult {
    pub fn episode_over(&self) -> bool {
        self.done || self.truncated
    }
}

pub trait Environment {
    fn name(&self) -> &str;
    fn obs_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    fn max_episode_steps(&self) -> usize;

    /// Starts a new episode and returns the first observation.
    fn reset(&mut self) -> Vec<f64>;

    /// Advances one step. Fails for actions outside `0..action_count()` and
    /// when the episode is already over.
    fn step(&mut self, action: usize) -> Result<StepResult>;
}
