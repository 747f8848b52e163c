//! End-to-end training runs: the episode loop, baseline policies, deadline
//! accounting, early exit, reports and parameter sweeps.
//!
//! Each episode the loop decides the batch size, resizes the replay buffer
//! to its reservation, runs the episode with one gradient step per
//! environment step, checks the budgets and the early-exit window, and
//! finally lets the coordinator rebalance memory.

pub mod clock;
pub mod config;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod sweep;

use thiserror::Error;

use crate::envs::EnvError;
use crate::feedback::FeedbackError;
use crate::replay::ReplayError;
use crate::tinynet::NetError;

pub use clock::{Clock, MonotonicClock, SimulatedClock, Work};
pub use config::{Policy, RunConfig};
pub use metrics::{assign_intermediate_deadline, check_early_exit, compute_miss_rate, EarlyExit, EpisodeLog};
pub use report::emit_report;
pub use runner::{calibrate, max_p_batch, run_experiment, run_experiment_with, Event, ExperimentReport, StopReason, Summary};
pub use sweep::{sweep, write_sweep, Axis, SweepRow};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unrecoverable out-of-memory: floors need {floor} bytes, budget is {budget}")]
    UnrecoverableOom { floor: u64, budget: u64 },
    #[error("training diverged: loss is {0}")]
    NonFiniteLoss(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay error: {0}")]
    Replay(#[from] ReplayError),
    #[error("environment error: {0}")]
    Env(#[from] EnvError),
    #[error("network error: {0}")]
    Net(NetError),
    #[error("batch control error: {0}")]
    Feedback(#[from] FeedbackError),
}

impl From<NetError> for RunError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::NonFiniteLoss(l) => RunError::NonFiniteLoss(l),
            other => RunError::Net(other),
        }
    }
}

impl RunError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::UnrecoverableOom { .. } => 3,
            RunError::NonFiniteLoss(_) => 4,
            _ => 1,
        }
    }
}
