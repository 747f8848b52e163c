//! Small feed-forward Q-network with hand-written backpropagation.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod mlp;
mod qlearn;

use thiserror::Error;

pub use adam::Adam;
pub use gradcheck::{check_with, gradient_check, relative_error, GradientReport, FD_STEP, MAX_CHECKED_PARAMS};
pub use mlp::{Dense, ForwardCache, Gradients, Mlp};
pub use qlearn::{compute_targets, sync_target, td_loss, train_step, Algorithm, QLearnerConfig, TrainingBatch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss is not finite ({0}); training diverged")]
    NonFiniteLoss(f64),
    #[error("minibatch is empty")]
    EmptyBatch,
    #[error("{0} parameters exceeds the finite-difference budget")]
    TooManyParameters(usize),
}

/// Bytes of workspace one sample occupies during a training step: the raw
/// state and next-state stacks, plus five f64 values per unit of every
/// layer (input included) for forward activations, backpropagated
/// gradients, next-state activations under both networks, and scratch.
pub fn workspace_bytes_per_sample(dims: &[usize], stack_bytes: usize) -> u64 {
    let widths: usize = dims.iter().sum();
    (2 * stack_bytes + 5 * widths * std::mem::size_of::<f64>()) as u64
}
