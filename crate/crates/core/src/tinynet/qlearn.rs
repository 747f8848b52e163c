//! DQN and double-DQN targets and the minibatch gradient step.

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{ForwardCache, Mlp};
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dqn,
    Ddqn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearnerConfig {
    pub discount_factor: f64,
    /// Episodes between hard copies of the online network into the target.
    pub target_sync_period: usize,
    pub learning_rate: f64,
    pub algorithm: Algorithm,
}

impl Default for QLearnerConfig {
    fn default() -> Self {
        Self { discount_factor: 0.99, target_sync_period: 10, learning_rate: 1e-3, algorithm: Algorithm::Ddqn }
    }
}

impl QLearnerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.discount_factor) {
            return Err(format!("discount factor {} outside [0, 1)", self.discount_factor));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.target_sync_period == 0 {
            return Err("target sync period must be at least one episode".into());
        }
        Ok(())
    }
}

/// A decoded minibatch: observations flattened row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingBatch {
    pub len: usize,
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
    pub dones: Vec<bool>,
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Bootstrapped regression target for each transition. Terminal
/// transitions get the bare reward and never read next-state values.
pub fn compute_targets(
    batch: &TrainingBatch,
    online: &Mlp,
    target: &Mlp,
    cfg: &QLearnerConfig,
) -> Result<Vec<f64>, NetError> {
    if batch.len == 0 {
        return Err(NetError::EmptyBatch);
    }
    let n_act = target.n_actions();
    let q_target = target.forward(&batch.next_states, batch.len)?;
    let q_online = match cfg.algorithm {
        Algorithm::Ddqn => Some(online.forward(&batch.next_states, batch.len)?),
        Algorithm::Dqn => None,
    };
    let targets = (0..batch.len)
        .map(|i| {
            if batch.dones[i] {
                return batch.rewards[i];
            }
            let row_t = &q_target[i * n_act..(i + 1) * n_act];
            let bootstrap = match &q_online {
                Some(q) => row_t[argmax(&q[i * n_act..(i + 1) * n_act])],
                None => row_t.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            batch.rewards[i] + cfg.discount_factor * bootstrap
        })
        .collect();
    Ok(targets)
}

/// Mean squared error between Q(s, a) and `targets`, and its gradient with
/// respect to the network output.
pub fn td_loss(cache: &ForwardCache, actions: &[usize], targets: &[f64], n_actions: usize) -> (f64, Vec<f64>) {
    let q = cache.output();
    let n = targets.len();
    let mut grad = vec![0.0; q.len()];
    let mut loss = 0.0;
    for i in 0..n {
        let idx = i * n_actions + actions[i];
        let err = q[idx] - targets[i];
        loss += err * err;
        grad[idx] = 2.0 * err / n as f64;
    }
    (loss / n as f64, grad)
}

/// One optimizer step on `online`. Returns the loss measured before the update.
pub fn train_step(
    online: &mut Mlp,
    target: &Mlp,
    opt: &mut Adam,
    batch: &TrainingBatch,
    cfg: &QLearnerConfig,
) -> Result<f64, NetError> {
    let targets = compute_targets(batch, online, target, cfg)?;
    let cache = online.forward_cached(&batch.states, batch.len)?;
    let (loss, grad_out) = td_loss(&cache, &batch.actions, &targets, online.n_actions());
    if !loss.is_finite() {
        return Err(NetError::NonFiniteLoss(loss));
    }
    let grads = online.backward(&cache, &grad_out);
    opt.step(online, &grads);
    Ok(loss)
}

/// Hard copy of the online parameters into the target network.
pub fn sync_target(online: &Mlp, target: &mut Mlp) -> Result<(), NetError> {
    target.copy_from(online)
}
