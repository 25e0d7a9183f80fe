//! Probability surrogate action deterministic policy gradient (PSADPG).
//!
//! A discrete-action agent emits a probability vector `p` on the action
//! simplex instead of an action. Sampling the concrete action from `p` is
//! treated as part of the environment, which turns discrete control into a
//! continuous deterministic control problem that a DDPG-style actor-critic
//! can solve. The crate contains:
//!
//! - [`nn`]: a small dense network engine with reverse-mode gradients and Adam.
//! - [`envs`]: a native Acrobot and an adapter that runs any tabular MDP.
//! - [`replay`]: the experience buffer holding one-hot surrogate actions.
//! - [`agents`]: the PSADPG actor-critic and a DQN baseline.
//! - [`theorem`]: value iteration over the task MDP and over a discretized
//!   probability-surrogate MDP, used to check that both have the same optimum.
//! - [`harness`]: configuration, seeding, training loops, curves and checkpoints.

pub mod agents;
pub mod envs;
pub mod error;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod theorem;

pub use error::{Error, Result};
