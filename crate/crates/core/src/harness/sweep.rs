//! One-axis sweeps over batch size or replay capacity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::metrics::median;
use super::runner::{run_experiment, ExperimentReport};
use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Batch,
    Buffer,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "batch" => Ok(Axis::Batch),
            "buffer" => Ok(Axis::Buffer),
            _ => Err(format!("unknown axis '{s}' (expected batch or buffer)")),
        }
    }
}

/// Per-value medians over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub seeds: usize,
    pub latency_s: f64,
    pub peak_bytes: u64,
    pub avg_reward: f64,
    pub final_reward: f64,
    pub per_step_ms: f64,
}

/// Config for one sweep point: the swept quantity is pinned, which takes
/// its controller out of the loop.
pub fn pinned(template: &RunConfig, axis: Axis, value: usize, seed: u64) -> RunConfig {
    let mut cfg = template.clone();
    cfg.seed = seed;
    match axis {
        Axis::Batch => cfg.fixed_batch = Some(value),
        Axis::Buffer => cfg.fixed_capacity = Some(value),
    }
    cfg
}

/// Runs every value with seeds `template.seed .. template.seed + seeds`.
/// Seeds of one value run on parallel threads.
pub fn sweep(template: &RunConfig, axis: Axis, values: &[usize], seeds: usize) -> Result<Vec<SweepRow>, RunError> {
    if values.is_empty() || seeds == 0 {
        return Err(RunError::Config("a sweep needs at least one value and one seed".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let configs: Vec<RunConfig> = (0..seeds as u64).map(|k| pinned(template, axis, v, template.seed + k)).collect();
        let reports: Vec<Result<ExperimentReport, RunError>> = std::thread::scope(|s| {
            let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_experiment(c))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        });
        let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
        let pick = |f: &dyn Fn(&ExperimentReport) -> f64| median(&reports.iter().map(f).collect::<Vec<_>>());
        rows.push(SweepRow {
            value: v,
            seeds,
            latency_s: pick(&|r| r.summary.total_latency_s),
            peak_bytes: pick(&|r| r.summary.peak_accounted_bytes as f64) as u64,
            avg_reward: pick(&|r| r.summary.avg_reward),
            final_reward: pick(&|r| r.summary.final_reward),
            per_step_ms: pick(&|r| r.summary.mean_train_step_ms),
        });
    }
    Ok(rows)
}

pub const SWEEP_COLUMNS: [&str; 7] = ["value", "seeds", "latency_s", "peak_bytes", "avg_reward", "final_reward", "per_step_ms"];

/// Writes `sweep.csv` into `out_dir`.
pub fn write_sweep(rows: &[SweepRow], out_dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(out_dir)?;
    let io = |e: csv::Error| RunError::Io(std::io::Error::other(e));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(out_dir.join("sweep.csv")).map_err(io)?;
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinning_sets_one_axis() {
        let t = RunConfig::default();
        let b = pinned(&t, Axis::Batch, 32, 7);
        assert_eq!((b.fixed_batch, b.fixed_capacity, b.seed), (Some(32), None, 7));
        let c = pinned(&t, Axis::Buffer, 500, 1);
        assert_eq!((c.fixed_batch, c.fixed_capacity), (None, Some(500)));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        assert!(matches!(sweep(&RunConfig::default(), Axis::Batch, &[], 1), Err(RunError::Config(_))));
    }
}
