//! Optimality of the probability-surrogate MDP on finite problems.
//!
//! The surrogate MDP replaces the action set with the probability simplex
//! and mixes rewards and transitions linearly in `p`. Since its Bellman
//! backup is affine in `p`, the optimum over any grid that contains the
//! simplex vertices equals the optimum over the whole simplex, and both
//! equal the task MDP's optimum. [`verify_theorem1`] checks this
//! numerically state by state.

mod mdp;
mod simplex;
mod value_iteration;
mod verify;

pub use mdp::TabularMdp;
pub use simplex::{enumerate_simplex_grid, SimplexGrid};
pub use value_iteration::{
    q_values, surrogate_mdp, surrogate_value_iteration, task_value_iteration, ValueFunction,
};
pub use verify::{verify_theorem1, StateReport, TheoremReport, OPTIMALITY_TOL};
