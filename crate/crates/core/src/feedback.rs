//! Deadline-driven batch-size control.
//!
//! Elapsed time and consumed data are compared as fractions of the
//! deadline `D` and the data budget `B`. Training that lags behind its
//! deadline gets a larger batch, training that runs ahead a smaller one.
//! The scaled size is confined to `[b_min, 4 * b_min]` and then capped by
//! the bytes reserved for batch execution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error("batch reservation of {m_batch} bytes cannot hold a single sample")]
    BatchMemoryTooSmall { m_batch: u64 },
    #[error("invalid batch policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    Episode,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchPolicy {
    pub b_min: usize,
    pub scale_factor: f64,
    pub b_base: usize,
    /// Bytes reserved for batch execution at episode 0.
    pub m_base: u64,
    pub granularity: Granularity,
    pub step_update_period: usize,
}

impl BatchPolicy {
    /// Base point `b_base = b_min`, charged `per_sample_bytes` per sample.
    pub fn new(b_min: usize, scale_factor: f64, per_sample_bytes: u64, granularity: Granularity) -> Self {
        Self {
            b_min,
            scale_factor,
            b_base: b_min,
            m_base: b_min as u64 * per_sample_bytes,
            granularity,
            step_update_period: 16,
        }
    }

    pub fn validate(&self) -> Result<(), FeedbackError> {
        let bad = |m: &str| Err(FeedbackError::InvalidPolicy(m.to_string()));
        if self.b_min < 1 {
            return bad("b_min must be at least 1");
        }
        if !(self.scale_factor > 1.0 && self.scale_factor.is_finite()) {
            return bad("scale factor must be a finite number above 1");
        }
        if self.b_base < 1 {
            return bad("b_base must be at least 1");
        }
        if self.m_base == 0 {
            return bad("M_base must be positive");
        }
        if self.step_update_period < 1 {
            return bad("step update period must be at least 1");
        }
        Ok(())
    }

    pub fn b_max(&self) -> usize {
        4 * self.b_min
    }

    /// Smallest batch reservation whose memory cap admits `b` samples.
    pub fn bytes_for_batch(&self, b: usize) -> u64 {
        // ceil(b * M_base / b_base)
        let num = b as u128 * self.m_base as u128;
        num.div_ceil(self.b_base as u128) as u64
    }
}

/// Deadline `D`, data budget `B` and the latest observed progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressTrackers {
    pub deadline_s: f64,
    pub data_budget: u64,
    pub elapsed_s: f64,
    pub consumed: u64,
}

impl ProgressTrackers {
    pub fn new(deadline_s: f64, data_budget: u64) -> Self {
        assert!(deadline_s > 0.0 && data_budget > 0);
        Self { deadline_s, data_budget, elapsed_s: 0.0, consumed: 0 }
    }

    /// Records progress and returns the time and data fractions `(a, b)`.
    pub fn track(&mut self, now_s: f64, consumed: u64) -> (f64, f64) {
        debug_assert!(now_s >= self.elapsed_s && consumed >= self.consumed);
        self.elapsed_s = now_s;
        self.consumed = consumed;
        self.fractions()
    }

    pub fn fractions(&self) -> (f64, f64) {
        (self.elapsed_s / self.deadline_s, self.consumed as f64 / self.data_budget as f64)
    }
}

pub fn scale_batch(b_i: usize, a: f64, b: f64, policy: &BatchPolicy) -> usize {
    debug_assert!(b_i >= 1);
    if a > b {
        (b_i as f64 * policy.scale_factor).floor() as usize
    } else if a < b {
        ((b_i as f64 / policy.scale_factor).floor() as usize).max(1)
    } else {
        b_i
    }
}

pub fn clamp_batch(candidate: usize, policy: &BatchPolicy) -> usize {
    candidate.clamp(policy.b_min, policy.b_max())
}

/// Largest batch the reservation `m_batch` admits.
pub fn memory_cap(m_batch: u64, policy: &BatchPolicy) -> u64 {
    let cap = m_batch as u128 * policy.b_base as u128 / policy.m_base as u128;
    cap.min(u64::MAX as u128) as u64
}

pub fn cap_batch_by_memory(clamped: usize, m_batch: u64, policy: &BatchPolicy) -> Result<usize, FeedbackError> {
    let cap = memory_cap(m_batch, policy);
    if cap < 1 {
        return Err(FeedbackError::BatchMemoryTooSmall { m_batch });
    }
    Ok((clamped as u64).min(cap) as usize)
}

/// One batch-size decision with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub a: f64,
    pub b: f64,
    pub b_i: usize,
    pub b_next: usize,
    pub cap: u64,
}

/// `track -> scale -> clamp -> cap`.
pub fn decide_batch(
    trackers: &mut ProgressTrackers,
    now_s: f64,
    consumed: u64,
    b_i: usize,
    m_batch: u64,
    policy: &BatchPolicy,
) -> Result<Decision, FeedbackError> {
    let (a, b) = trackers.track(now_s, consumed);
    let clamped = clamp_batch(scale_batch(b_i, a, b, policy), policy);
    let b_next = cap_batch_by_memory(clamped, m_batch, policy)?;
    Ok(Decision { a, b, b_i, b_next, cap: memory_cap(m_batch, policy) })
}

/// Decision trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub episode: usize,
    pub step: u64,
    pub a: f64,
    pub b: f64,
    pub b_i: usize,
    pub b_next: usize,
    pub cap: u64,
}

/// Holds the current batch size and decides when it is recomputed.
#[derive(Debug, Clone)]
pub struct BatchController {
    pub policy: BatchPolicy,
    pub trackers: ProgressTrackers,
    current: usize,
    steps_since_decision: usize,
    trace: Vec<DecisionRecord>,
}

impl BatchController {
    pub fn new(policy: BatchPolicy, trackers: ProgressTrackers) -> Result<Self, FeedbackError> {
        policy.validate()?;
        Ok(Self { current: policy.b_min, policy, trackers, steps_since_decision: 0, trace: Vec::new() })
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn trace(&self) -> &[DecisionRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<DecisionRecord> {
        std::mem::take(&mut self.trace)
    }

    fn decide(&mut self, episode: usize, now_s: f64, consumed: u64, m_batch: u64) -> Result<usize, FeedbackError> {
        let d = decide_batch(&mut self.trackers, now_s, consumed, self.current, m_batch, &self.policy)?;
        self.trace.push(DecisionRecord {
            episode,
            step: consumed,
            a: d.a,
            b: d.b,
            b_i: d.b_i,
            b_next: d.b_next,
            cap: d.cap,
        });
        self.current = d.b_next;
        self.steps_since_decision = 0;
        Ok(self.current)
    }

    /// Decision at the start of an episode (both granularities).
    pub fn on_episode_start(&mut self, episode: usize, now_s: f64, consumed: u64, m_batch: u64) -> Result<usize, FeedbackError> {
        self.decide(episode, now_s, consumed, m_batch)
    }

    /// Called after every training step. At step granularity the batch is
    /// recomputed once every `step_update_period` steps.
    pub fn on_train_step(&mut self, episode: usize, now_s: f64, consumed: u64, m_batch: u64) -> Result<usize, FeedbackError> {
        if self.policy.granularity == Granularity::Step {
            self.steps_since_decision += 1;
            if self.steps_since_decision >= self.policy.step_update_period {
                return self.decide(episode, now_s, consumed, m_batch);
            }
        }
        Ok(self.current)
    }
}
