//! Report files written after a run.
//!
//! | file | content |
//! |---|---|
//! | `episodes.csv` | one row per episode, columns as in [`EPISODE_COLUMNS`] |
//! | `summary.json` | summary, configuration and OOM events |
//! | `decisions.csv` | batch-size decision trace, [`DECISION_COLUMNS`] |
//! | `coordination.csv` | memory coordination trace, [`COORDINATION_COLUMNS`] |
//! | `events.log` | `ISO-8601-time kind key=value ...`, one event per line |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::runner::ExperimentReport;
use super::RunError;

pub const EPISODE_COLUMNS: [&str; 19] = [
    "index",
    "runtime_s",
    "reward",
    "steps",
    "cumulative_steps",
    "train_steps",
    "batch_size",
    "n_entries",
    "capacity",
    "bytes_used",
    "m_batch",
    "m_replay",
    "budget",
    "accounted_peak",
    "cost",
    "mean_loss",
    "deadline_s",
    "elapsed_s",
    "missed",
];

pub const DECISION_COLUMNS: [&str; 7] = ["episode", "step", "a", "b", "b_i", "b_next", "cap"];

pub const COORDINATION_COLUMNS: [&str; 6] = ["episode", "alpha", "beta", "m_batch", "m_replay", "oom_count"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e))
}

/// Writes all report files into `out_dir`, creating it if needed.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let p = |name: &str| out_dir.join(name);

    write_csv(&p("episodes.csv"), &EPISODE_COLUMNS, &report.episodes)?;
    write_csv(&p("decisions.csv"), &DECISION_COLUMNS, &report.decisions)?;
    write_csv(&p("coordination.csv"), &COORDINATION_COLUMNS, &report.coordination)?;

    let summary = serde_json::json!({
        "summary": report.summary,
        "config": report.config,
        "oom_events": report.oom_events,
    });
    let mut f = BufWriter::new(File::create(p("summary.json"))?);
    serde_json::to_writer_pretty(&mut f, &summary).map_err(std::io::Error::other)?;
    writeln!(f)?;
    f.flush()?;

    let mut f = BufWriter::new(File::create(p("events.log"))?);
    for e in &report.events {
        writeln!(f, "{}", e.line())?;
    }
    f.flush()?;

    Ok(["episodes.csv", "summary.json", "decisions.csv", "coordination.csv", "events.log"].iter().map(|n| p(n)).collect())
}
