use std::time::Instant;

use parking_lot::Mutex;

/// Work the training loop reports to the clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Work {
    EnvStep,
    TrainStep { batch: usize },
}

/// Source of elapsed time for deadline accounting.
pub trait Clock: Send + Sync {
    /// Seconds since the clock was created.
    fn now(&self) -> f64;

    /// Notifies the clock of completed work. Real clocks ignore it.
    fn charge(&self, _work: Work) {}
}

/// Wall time from a monotonic source.
#[derive(Debug, Clone)]
pub struct MonotonicClock {
    start: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Deterministic clock that advances only by charged work.
#[derive(Debug)]
pub struct SimulatedClock {
    pub env_step_s: f64,
    pub train_step_s: f64,
    pub per_sample_s: f64,
    elapsed: Mutex<f64>,
}

impl SimulatedClock {
    pub fn new(env_step_s: f64, train_step_s: f64, per_sample_s: f64) -> Self {
        Self { env_step_s, train_step_s, per_sample_s, elapsed: Mutex::new(0.0) }
    }

    pub fn cost(&self, work: Work) -> f64 {
        match work {
            Work::EnvStep => self.env_step_s,
            Work::TrainStep { batch } => self.train_step_s + self.per_sample_s * batch as f64,
        }
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> f64 {
        *self.elapsed.lock()
    }

    fn charge(&self, work: Work) {
        *self.elapsed.lock() += self.cost(work);
    }
}
