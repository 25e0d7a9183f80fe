use rand::Rng;

use super::{Environment, StepResult};
use crate::error::{Error, Result};
use crate::theorem::TabularMdp;

/// Runs a [`TabularMdp`] as an episodic environment with one-hot
/// observations. Episodes start in the MDP's start state, end on entering an
/// absorbing state, and are truncated after `horizon` steps.
#[derive(Debug, Clone)]
pub struct TabularEnv<R> {
    mdp: TabularMdp,
    horizon: usize,
    rng: R,
    state: usize,
    steps: usize,
    finished: bool,
}

pub fn tabular_env<R: Rng>(mdp: TabularMdp, horizon: usize, rng: R) -> Result<TabularEnv<R>> {
    mdp.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("tabular horizon must be positive".into()));
    }
    Ok(TabularEnv {
        state: mdp.start_state(),
        mdp,
        horizon,
        rng,
        steps: 0,
        finished: true,
    })
}

impl<R: Rng> TabularEnv<R> {
    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn one_hot_state(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.mdp.n_states()];
        v[s] = 1.0;
        v
    }
}

impl<R: Rng> Environment for TabularEnv<R> {
    fn name(&self) -> &str {
        "tabular"
    }

    fn obs_dim(&self) -> usize {
        self.mdp.n_states()
    }

    fn action_count(&self) -> usize {
        self.mdp.n_actions()
    }

    fn max_episode_steps(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = self.mdp.start_state();
        self.steps = 0;
        self.finished = self.mdp.is_absorbing(self.state);
        self.one_hot_state(self.state)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if action >= self.mdp.n_actions() {
            return Err(Error::InvalidArgument(format!(
                "action {action} not in 0..{}",
                self.mdp.n_actions()
            )));
        }
        if self.finished {
            return Err(Error::State("episode is over; call reset".into()));
        }
        let reward = self.mdp.reward(self.state, action);
        let row = self.mdp.transition_row(self.state, action);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut next = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (s, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = s;
                break;
            }
        }
        self.state = next;
        self.steps += 1;
        let done = self.mdp.is_absorbing(next);
        let truncated = !done && self.steps >= self.horizon;
        self.finished = done || truncated;
        Ok(StepResult {
            observation: self.one_hot_state(next),
            reward,
            done,
            truncated,
        })
    }
}
