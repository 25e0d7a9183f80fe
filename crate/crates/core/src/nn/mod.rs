//! Dense feed-forward networks with reverse-mode gradients and Adam.
//!
//! Everything is `f64`. A [`Network`] is a chain of affine layers, each
//! followed by an [`Activation`]. [`Network::forward`] returns the output
//! together with a [`ForwardCache`] that [`Network::backward`] consumes.
//! Parameter gradients accumulate until [`Network::zero_grad`] is called.

mod activation;
pub mod gradcheck;
mod loss;
mod matrix;
mod network;
mod param;

pub use activation::{softmax, softmax_row, Activation};
pub use loss::mse_loss;
pub use matrix::Matrix;
pub use network::{ForwardCache, Network, NetworkSpec};
pub use param::{adam_step, AdamConfig, Parameter};
