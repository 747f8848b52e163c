//! Runtime memory coordination between batch execution and replay storage.
//!
//! After every episode the coordinator compares the latest runtime and
//! reward with the mean of the previous `γ` episodes:
//!
//! ```text
//! α = γ·t_i / Σ t_{i-j}        β = γ·R_i / Σ R_{i-j}
//! M_batch'  = M_batch  · (1 + max(α-1, 0) · (1 - min(β, 1)))
//! M_replay' = M_replay · (1 + min(α, 1) · max(1 - β, 0))
//! ```
//!
//! Desired reservations whose sum exceeds the budget `M` are scaled down
//! proportionally so they sum to exactly `M`.
//!
//! Note that with `α > 1` and `β ≥ 1` both growth terms vanish, so a slow
//! episode with steady rewards leaves the batch reservation unchanged.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::replay::{capacity_for, DedupReplayBuffer, ReplayBuffer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoordinatorError {
    #[error("out of memory: floors need {floor} bytes but only {budget} are available")]
    UnrecoverableOom { floor: u64, budget: u64 },
    #[error("invalid coordinator configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryReservation {
    pub total: u64,
    pub m_batch: u64,
    pub m_replay: u64,
    /// Fraction of `total` initially given to batch execution.
    pub initial_share: f64,
}

impl MemoryReservation {
    pub fn new(total: u64, initial_share: f64) -> Self {
        let m_batch = (total as f64 * initial_share).floor() as u64;
        Self { total, m_batch: m_batch.min(total), m_replay: total - m_batch.min(total), initial_share }
    }

    pub fn reserved(&self) -> u64 {
        self.m_batch + self.m_replay
    }
}

/// The last `γ` episode runtimes and rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfWindow {
    gamma: usize,
    runtimes: VecDeque<f64>,
    rewards: VecDeque<f64>,
}

impl PerfWindow {
    pub fn new(gamma: usize) -> Self {
        assert!(gamma >= 1);
        Self { gamma, runtimes: VecDeque::with_capacity(gamma), rewards: VecDeque::with_capacity(gamma) }
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.runtimes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runtimes.is_empty()
    }

    pub fn push(&mut self, runtime: f64, reward: f64) {
        if self.runtimes.len() == self.gamma {
            self.runtimes.pop_front();
            self.rewards.pop_front();
        }
        self.runtimes.push_back(runtime);
        self.rewards.push_back(reward);
    }
}

pub fn compute_alpha_beta(window: &PerfWindow, t_i: f64, r_i: f64) -> (f64, f64) {
    if window.len() < window.gamma {
        return (1.0, 1.0);
    }
    let g = window.gamma as f64;
    let ratio = |x: f64, hist: &VecDeque<f64>| {
        let sum: f64 = hist.iter().sum();
        if sum > 0.0 {
            g * x / sum
        } else {
            1.0
        }
    };
    (ratio(t_i, &window.runtimes), ratio(r_i, &window.rewards))
}

/// Desired reservations before renormalization, in (possibly fractional) bytes.
pub fn update_reservations(res: &MemoryReservation, alpha: f64, beta: f64) -> (f64, f64) {
    debug_assert!(alpha >= 0.0 && beta >= 0.0);
    let batch = res.m_batch as f64 * (1.0 + (alpha - 1.0).max(0.0) * (1.0 - beta.min(1.0)));
    let replay = res.m_replay as f64 * (1.0 + alpha.min(1.0) * (1.0 - beta).max(0.0));
    (batch, replay)
}

/// Fits desired reservations into `total`. Under-budget requests pass
/// through (rounded down); over-budget ones are scaled to sum to `total`.
pub fn renormalize(total: u64, batch: f64, replay: f64) -> (u64, u64) {
    debug_assert!(batch + replay > 0.0);
    if batch + replay <= total as f64 {
        return (batch.floor() as u64, replay.floor() as u64);
    }
    let share = batch / (batch + replay);
    let b = ((total as f64 * share).floor() as u64).min(total);
    (b, total - b)
}

/// Raises either reservation to its floor, taking the difference from the
/// other one. Requires `batch_floor + replay_floor <= total`.
fn enforce_floors(m_batch: u64, m_replay: u64, total: u64, batch_floor: u64, replay_floor: u64) -> (u64, u64) {
    let mut b = m_batch.max(batch_floor);
    let mut r = m_replay.max(replay_floor);
    if b + r > total {
        let excess = b + r - total;
        if b > m_batch {
            r -= excess.min(r - replay_floor);
        } else {
            b -= excess.min(b - batch_floor);
        }
    }
    (b, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinatorConfig {
    pub gamma: usize,
    /// Multiplier applied to both reservations per OOM recovery round.
    pub oom_scale: f64,
    /// OOM events after which the recovered reservation becomes the budget.
    pub persist_after: usize,
    /// Smallest batch reservation that still admits `b_min` samples.
    pub batch_floor: u64,
    /// Smallest replay reservation that holds one transition.
    pub replay_floor: u64,
}

impl CoordinatorConfig {
    pub fn validate(&self, total: u64) -> Result<(), CoordinatorError> {
        let bad = |m: String| Err(CoordinatorError::Invalid(m));
        if self.gamma < 1 {
            return bad("gamma must be at least 1".into());
        }
        if !(self.oom_scale > 0.0 && self.oom_scale < 1.0) {
            return bad(format!("OOM scale {} must lie in (0, 1)", self.oom_scale));
        }
        if self.persist_after < 1 {
            return bad("OOM persistence threshold must be at least 1".into());
        }
        if self.batch_floor + self.replay_floor > total {
            return bad(format!(
                "memory budget {total} is below the {} byte floor",
                self.batch_floor + self.replay_floor
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Recovery {
    /// Both reservations scaled down `rounds` times, buffer shrunk to fit.
    ScaleDown { rounds: u32, m_batch: u64, m_replay: u64, capacity_before: usize, capacity_after: usize, evicted: usize, reclaimed: u64 },
    /// A buffer request larger than its reservation was clamped.
    ClampCapacity { requested: u64, granted: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OomEvent {
    pub episode: usize,
    pub attempted: u64,
    pub budget: u64,
    pub recovery: Recovery,
}

/// Coordination trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinationRecord {
    pub episode: usize,
    pub alpha: f64,
    pub beta: f64,
    pub m_batch: u64,
    pub m_replay: u64,
    pub oom_count: usize,
}

#[derive(Debug, Clone)]
pub struct Coordinator {
    pub config: CoordinatorConfig,
    reservation: MemoryReservation,
    window: PerfWindow,
    oom_events: Vec<OomEvent>,
}

impl Coordinator {
    pub fn new(config: CoordinatorConfig, reservation: MemoryReservation) -> Result<Self, CoordinatorError> {
        config.validate(reservation.total)?;
        let (b, r) = enforce_floors(
            reservation.m_batch,
            reservation.m_replay,
            reservation.total,
            config.batch_floor,
            config.replay_floor,
        );
        Ok(Self {
            window: PerfWindow::new(config.gamma),
            reservation: MemoryReservation { m_batch: b, m_replay: r, ..reservation },
            config,
            oom_events: Vec::new(),
        })
    }

    pub fn reservation(&self) -> &MemoryReservation {
        &self.reservation
    }

    pub fn window(&self) -> &PerfWindow {
        &self.window
    }

    pub fn oom_events(&self) -> &[OomEvent] {
        &self.oom_events
    }

    /// Updates the reservations from the finished episode's runtime and reward.
    pub fn coordinate(&mut self, episode: usize, runtime: f64, reward: f64) -> CoordinationRecord {
        let (alpha, beta) = compute_alpha_beta(&self.window, runtime, reward);
        let beta = beta.max(0.0);
        let (want_b, want_r) = update_reservations(&self.reservation, alpha, beta);
        let res = &mut self.reservation;
        let (b, r) = renormalize(res.total, want_b, want_r);
        let (b, r) = enforce_floors(b, r, res.total, self.config.batch_floor, self.config.replay_floor);
        res.m_batch = b;
        res.m_replay = r;
        self.window.push(runtime, reward);
        CoordinationRecord { episode, alpha, beta, m_batch: b, m_replay: r, oom_count: self.oom_events.len() }
    }

    /// Reacts to a drop of the total budget to `new_total` (for example
    /// memory taken by another process). Reservations that no longer fit
    /// are recovered through [`Coordinator::handle_oom`].
    pub fn set_total(&mut self, new_total: u64) {
        self.reservation.total = new_total;
    }

    /// Scales both reservations down until they fit the budget, shrinks the
    /// buffer to the new replay capacity and records the event.
    pub fn handle_oom(
        &mut self,
        episode: usize,
        attempted: u64,
        buffer: &mut DedupReplayBuffer,
    ) -> Result<OomEvent, CoordinatorError> {
        let cfg = self.config;
        let res = &mut self.reservation;
        let floor = cfg.batch_floor + cfg.replay_floor;
        if floor > res.total {
            return Err(CoordinatorError::UnrecoverableOom { floor, budget: res.total });
        }
        let mut rounds = 0;
        while res.reserved() > res.total {
            let b = ((res.m_batch as f64 * cfg.oom_scale) as u64).max(cfg.batch_floor);
            let r = ((res.m_replay as f64 * cfg.oom_scale) as u64).max(cfg.replay_floor);
            res.m_batch = b;
            res.m_replay = r;
            rounds += 1;
        }
        let capacity_before = buffer.capacity();
        let capacity_after = (capacity_for(res.m_replay, buffer.layout()) as usize).min(capacity_before);
        buffer.synchronize();
        let evicted = buffer.shrink(capacity_after);
        let reclaimed = buffer.garbage_collect();
        let event = OomEvent {
            episode,
            attempted,
            budget: res.total,
            recovery: Recovery::ScaleDown {
                rounds,
                m_batch: res.m_batch,
                m_replay: res.m_replay,
                capacity_before,
                capacity_after,
                evicted,
                reclaimed,
            },
        };
        self.oom_events.push(event);
        if self.oom_events.len() >= cfg.persist_after {
            // Later growth is bounded by what survived the recovery.
            res.total = res.reserved();
        }
        Ok(event)
    }

    /// Records a buffer request that exceeded the replay reservation and
    /// was clamped to `granted` bytes.
    pub fn record_clamp(&mut self, episode: usize, requested: u64, granted: u64) -> OomEvent {
        let event = OomEvent {
            episode,
            attempted: requested,
            budget: self.reservation.m_replay,
            recovery: Recovery::ClampCapacity { requested, granted },
        };
        self.oom_events.push(event);
        event
    }
}
