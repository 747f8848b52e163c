use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{make_env, EnvKind, ObservationSpec};
use crate::feedback::{BatchPolicy, Granularity};
use crate::replay::{dedup_bytes, ReplayLayout};
use crate::tinynet::{workspace_bytes_per_sample, Algorithm, QLearnerConfig};

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Preset batch `b_min` with a very large requested buffer.
    MaxA,
    /// Largest memory-feasible batch with a minimal buffer.
    MaxP,
    R3Episode,
    R3Step,
}

impl Policy {
    pub fn is_r3(self) -> bool {
        matches!(self, Policy::R3Episode | Policy::R3Step)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::MaxA => "max-a",
            Policy::MaxP => "max-p",
            Policy::R3Episode => "r3-episode",
            Policy::R3Step => "r3-step",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "max-a" => Ok(Policy::MaxA),
            "max-p" => Ok(Policy::MaxP),
            "r3-episode" => Ok(Policy::R3Episode),
            "r3-step" => Ok(Policy::R3Step),
            _ => Err(format!("unknown policy '{s}' (expected max-a, max-p, r3-episode or r3-step)")),
        }
    }
}

/// Flat run configuration. Every key is optional in the file; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvKind,
    pub pixel_height: usize,
    pub pixel_width: usize,
    pub n_frames: usize,

    pub algo: Algorithm,
    pub discount: f64,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub target_sync_episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the data budget over which epsilon decays linearly.
    pub epsilon_fraction: f64,

    pub policy: Policy,
    /// End-to-end deadline `D` in seconds.
    pub deadline_s: f64,
    /// Data budget `B` in environment steps.
    pub data_budget: u64,
    /// Training cost budget `C` in base-batch gradient steps; defaults to `B`.
    pub cost_budget: Option<u64>,
    pub max_episodes: usize,
    /// Total memory budget `M` in bytes.
    pub memory_budget: u64,
    /// Share of `M` initially reserved for batch execution.
    pub initial_batch_share: f64,

    pub b_min: usize,
    pub scale_factor: f64,
    pub step_update_period: usize,
    pub gamma_window: usize,
    pub early_exit_window: usize,
    pub target_reward: f64,

    pub seed: u64,
    /// Materialize the next minibatch on the prefetch worker.
    pub prefetch: bool,

    /// Buffer capacity requested by the max-a baseline.
    pub max_a_buffer: u64,
    pub oom_scale: f64,
    pub oom_persist_after: usize,
    /// Episode at whose start the memory budget is cut (fault injection).
    pub budget_cut_episode: Option<usize>,
    pub budget_cut_fraction: f64,

    /// Batch size held fixed, disabling the feedback loop.
    pub fixed_batch: Option<usize>,
    /// Replay capacity held fixed, disabling the coordinator.
    pub fixed_capacity: Option<usize>,

    /// Busy-loop threads competing for CPU during the run.
    pub interference_threads: usize,
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Cartpole,
            pixel_height: 16,
            pixel_width: 16,
            n_frames: 4,
            algo: Algorithm::Ddqn,
            discount: 0.99,
            learning_rate: 5e-4,
            hidden: vec![64, 64],
            target_sync_episodes: 5,
            epsilon_start: 1.0,
            epsilon_end: 0.02,
            epsilon_fraction: 0.1,
            policy: Policy::R3Episode,
            deadline_s: 600.0,
            data_budget: 100_000,
            cost_budget: None,
            max_episodes: 500,
            memory_budget: 8 << 20,
            initial_batch_share: 0.25,
            b_min: 64,
            scale_factor: 2.0,
            step_update_period: 16,
            gamma_window: 4,
            early_exit_window: 10,
            target_reward: 200.0,
            seed: 0,
            prefetch: true,
            max_a_buffer: 1_000_000,
            oom_scale: 0.8,
            oom_persist_after: 1,
            budget_cut_episode: None,
            budget_cut_fraction: 0.6,
            fixed_batch: None,
            fixed_capacity: None,
            interference_threads: 0,
            checkpoint_path: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn cost_budget(&self) -> u64 {
        self.cost_budget.unwrap_or(self.data_budget)
    }

    pub fn observation_spec(&self) -> ObservationSpec {
        make_env(self.env, (self.pixel_height, self.pixel_width), self.n_frames).spec().clone()
    }

    pub fn n_actions(&self) -> usize {
        make_env(self.env, (self.pixel_height, self.pixel_width), self.n_frames).n_actions()
    }

    pub fn layout(&self) -> ReplayLayout {
        ReplayLayout::new(&self.observation_spec())
    }

    pub fn network_dims(&self) -> Vec<usize> {
        let spec = self.observation_spec();
        let mut dims = vec![spec.input_dim()];
        dims.extend(&self.hidden);
        dims.push(self.n_actions());
        dims
    }

    /// Workspace bytes charged per minibatch sample.
    pub fn per_sample_bytes(&self) -> u64 {
        workspace_bytes_per_sample(&self.network_dims(), self.observation_spec().stack_bytes())
    }

    pub fn learner(&self) -> QLearnerConfig {
        QLearnerConfig {
            discount_factor: self.discount,
            target_sync_period: self.target_sync_episodes,
            learning_rate: self.learning_rate,
            algorithm: self.algo,
        }
    }

    pub fn batch_policy(&self) -> BatchPolicy {
        let granularity = match self.policy {
            Policy::R3Step => Granularity::Step,
            _ => Granularity::Episode,
        };
        BatchPolicy {
            step_update_period: self.step_update_period,
            ..BatchPolicy::new(self.b_min, self.scale_factor, self.per_sample_bytes(), granularity)
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if !(self.deadline_s > 0.0 && self.deadline_s.is_finite()) {
            return bad(format!("deadline_s must be positive, got {}", self.deadline_s));
        }
        if self.data_budget == 0 || self.cost_budget() == 0 || self.max_episodes == 0 || self.memory_budget == 0 {
            return bad("data_budget, cost_budget, max_episodes and memory_budget must be positive".into());
        }
        if self.early_exit_window < 1 {
            return bad("early_exit_window must be at least 1".into());
        }
        if self.env == EnvKind::Pixel && (self.pixel_height < 2 || self.pixel_width < 2 || self.n_frames < 1) {
            return bad("pixel environment needs at least 2x2 frames and one stacked frame".into());
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer widths must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.initial_batch_share) {
            return bad("initial_batch_share must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_end)
            || !(self.epsilon_fraction > 0.0 && self.epsilon_fraction <= 1.0)
        {
            return bad("epsilon schedule values must be probabilities, with a positive decay fraction".into());
        }
        if !(self.budget_cut_fraction > 0.0 && self.budget_cut_fraction <= 1.0) {
            return bad("budget_cut_fraction must lie in (0, 1]".into());
        }
        if self.fixed_batch == Some(0) || self.fixed_capacity == Some(0) {
            return bad("fixed batch and capacity must be positive".into());
        }
        self.learner().validate().map_err(RunError::Config)?;
        self.batch_policy().validate().map_err(|e| RunError::Config(e.to_string()))?;
        let floor = self.batch_policy().bytes_for_batch(self.b_min) + dedup_bytes(1, &self.layout());
        if floor > self.memory_budget {
            return bad(format!(
                "memory_budget {} cannot hold b_min={} samples and one transition ({floor} bytes)",
                self.memory_budget, self.b_min
            ));
        }
        if !(self.oom_scale > 0.0 && self.oom_scale < 1.0) || self.oom_persist_after < 1 || self.gamma_window < 1 {
            return bad("oom_scale must lie in (0, 1); oom_persist_after and gamma_window must be at least 1".into());
        }
        Ok(())
    }
}
