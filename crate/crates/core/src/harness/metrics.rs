use serde::{Deserialize, Serialize};

/// One finished (or budget-truncated) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub index: usize,
    pub runtime_s: f64,
    pub reward: f64,
    pub steps: u64,
    pub cumulative_steps: u64,
    pub train_steps: u64,
    pub batch_size: usize,
    pub n_entries: usize,
    pub capacity: usize,
    pub bytes_used: u64,
    pub m_batch: u64,
    pub m_replay: u64,
    /// Memory budget in force during the episode.
    pub budget: u64,
    /// Largest buffer plus batch-workspace bytes seen during the episode.
    pub accounted_peak: u64,
    pub cost: f64,
    pub mean_loss: f64,
    /// Intermediate deadline `d_i`.
    pub deadline_s: f64,
    /// Run time elapsed at the end of the episode.
    pub elapsed_s: f64,
    pub missed: bool,
}

/// Deadline share proportional to the data budget consumed so far.
pub fn assign_intermediate_deadline(deadline_s: f64, data_budget: u64, cumulative_steps: u64) -> f64 {
    deadline_s * cumulative_steps as f64 / data_budget as f64
}

/// True iff the last `k` rewards are all at least `target`.
pub fn check_early_exit(rewards: &[f64], k: usize, target: f64) -> bool {
    k >= 1 && rewards.len() >= k && rewards[rewards.len() - k..].iter().all(|&r| r >= target)
}

/// Consecutive-target counter for streaming use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyExit {
    pub window: usize,
    pub target: f64,
    streak: usize,
}

impl EarlyExit {
    pub fn new(window: usize, target: f64) -> Self {
        Self { window, target, streak: 0 }
    }

    /// Feeds one episode reward; true once the window condition holds.
    pub fn observe(&mut self, reward: f64) -> bool {
        self.streak = if reward >= self.target { self.streak + 1 } else { 0 };
        self.streak >= self.window
    }
}

pub fn compute_miss_rate(logs: &[EpisodeLog]) -> f64 {
    if logs.is_empty() {
        return 0.0;
    }
    logs.iter().filter(|l| l.missed).count() as f64 / logs.len() as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(missed: bool) -> EpisodeLog {
        EpisodeLog {
            index: 0,
            runtime_s: 0.0,
            reward: 0.0,
            steps: 1,
            cumulative_steps: 1,
            train_steps: 0,
            batch_size: 1,
            n_entries: 0,
            capacity: 0,
            bytes_used: 0,
            m_batch: 0,
            m_replay: 0,
            budget: 0,
            accounted_peak: 0,
            cost: 0.0,
            mean_loss: 0.0,
            deadline_s: 0.0,
            elapsed_s: 0.0,
            missed,
        }
    }

    #[test]
    fn deadline_is_proportional() {
        assert_eq!(assign_intermediate_deadline(100.0, 10_000, 2_500), 25.0);
        assert_eq!(assign_intermediate_deadline(100.0, 10_000, 10_000), 100.0);
        assert_eq!(assign_intermediate_deadline(100.0, 10_000, 0), 0.0);
    }

    #[test]
    fn early_exit_window() {
        assert!(check_early_exit(&[200.0; 10], 10, 200.0));
        let mut nine = vec![200.0; 10];
        nine[3] = 199.0;
        assert!(!check_early_exit(&nine, 10, 200.0));
        assert!(check_early_exit(&[3.0, 250.0], 1, 200.0));
        assert!(!check_early_exit(&[200.0; 9], 10, 200.0));
    }

    #[test]
    fn streaming_matches_window() {
        let rewards = [200.0, 10.0, 201.0, 200.0, 300.0, 0.0, 200.0, 200.0, 200.0];
        let mut e = EarlyExit::new(3, 200.0);
        for i in 0..rewards.len() {
            assert_eq!(e.observe(rewards[i]), check_early_exit(&rewards[..=i], 3, 200.0), "{i}");
        }
    }

    #[test]
    fn miss_rates() {
        assert_eq!(compute_miss_rate(&[log(false), log(false)]), 0.0);
        assert_eq!(compute_miss_rate(&[log(true), log(true)]), 1.0);
        let mut logs: Vec<_> = (0..12).map(|_| log(false)).collect();
        for l in logs.iter_mut().take(3) {
            l.missed = true;
        }
        assert_eq!(compute_miss_rate(&logs), 0.25);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
