//! CSV and JSON writers for run logs and aggregates.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use gnt_core::analysis::LearningCurve;
use gnt_core::RunLog;

pub fn run_dir(out: &Path, label: &str, seed: u64) -> PathBuf {
    out.join(format!("{}_seed{}", label, seed))
}

/// Write one run's logs: per-episode, per-task-utility, replacement-event and
/// stable-rank CSVs plus the full JSON log.
pub fn write_run(dir: &Path, log: &RunLog) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut w = csv::Writer::from_path(dir.join("episodes.csv"))?;
    w.write_record(["episode", "steps", "return"])?;
    for e in &log.episodes {
        w.write_record([e.episode.to_string(), e.steps.to_string(), format!("{}", e.ret)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("utility.csv"))?;
    w.write_record(["step", "task_id", "subgoal", "utility", "age"])?;
    for u in &log.utilities {
        w.write_record([
            u.step.to_string(),
            u.task_id.to_string(),
            u.subgoal.to_string(),
            format!("{}", u.utility),
            u.age.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("events.csv"))?;
    w.write_record(["step", "replaced_subgoal", "new_subgoal"])?;
    for ev in &log.events {
        w.write_record([
            ev.step.to_string(),
            ev.old_subgoal.to_string(),
            ev.new_subgoal.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("rank.csv"))?;
    w.write_record(["episode", "stable_rank"])?;
    for r in &log.ranks {
        w.write_record([r.episode.to_string(), format!("{}", r.stable_rank)])?;
    }
    w.flush()?;

    fs::write(dir.join("runlog.json"), serde_json::to_string(log)?)?;
    Ok(())
}

/// Plot-ready learning curve: episode index, mean steps, standard error.
pub fn write_curve(path: &Path, curve: &LearningCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "mean_steps", "stderr"])?;
    for (i, (m, s)) in curve.mean.iter().zip(&curve.stderr).enumerate() {
        w.write_record([i.to_string(), format!("{}", m), format!("{}", s)])?;
    }
    w.flush()?;
    Ok(())
}

/// Retained-subgoal histogram: bin coordinates and count.
pub fn write_histogram(path: &Path, hist: &BTreeMap<(usize, usize), usize>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_row", "bin_col", "count"])?;
    for (&(r, c), &n) in hist {
        w.write_record([r.to_string(), c.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
