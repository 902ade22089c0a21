//! Command-line entry point for the auxiliary-task discovery experiments.

mod config;
mod output;

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gnt_core::analysis::{learning_curve, subgoal_histogram};
use gnt_core::harness::{run_experiment, sweep, Variant};
use gnt_core::RunLog;

use config::FileConfig;

#[derive(Parser)]
#[command(name = "gnt", about = "Generate-and-test auxiliary task discovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more seeds of a configured experiment and write logs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Single seed to run; overrides the config's seed count.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Step-size sweep: pilot every candidate, pick the lowest mean AUC,
    /// then rerun the winner for the final seed count.
    ///
    /// For the generate_and_test variant the pilot runs use the hand-designed
    /// good tasks, and the winner's step-size is reused for generate-and-test.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Seeds per candidate during the pilot.
        #[arg(long, default_value_t = 10)]
        pilot_seeds: u64,
        /// Seeds for the winning step-size rerun.
        #[arg(long, default_value_t = 30)]
        final_seeds: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Aggregate run logs into a plot-ready CSV (x, mean, stderr).
    Analyze {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a retained-subgoal histogram CSV next to the curve.
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Bins per axis for pinball subgoal histograms.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Collect retained subgoals from run logs into a task pool file.
    Pool {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, &out),
        Command::Sweep { config, pilot_seeds, final_seeds, out } => {
            cmd_sweep(&config, pilot_seeds, final_seeds, &out)
        }
        Command::Analyze { logs, out, histogram, bins } => {
            cmd_analyze(&logs, &out, histogram.as_deref(), bins)
        }
        Command::Pool { from, out } => cmd_pool(&from, &out),
    }
}

fn cmd_run(config_path: &PathBuf, seed: Option<u64>, out: &PathBuf) -> Result<()> {
    let file_config = FileConfig::load(config_path)?;
    let experiment = file_config.to_experiment()?;
    let seeds: Vec<u64> = match seed {
        Some(s) => vec![s],
        None => (0..file_config.seeds).collect(),
    };
    for s in seeds {
        match run_experiment(&experiment, s) {
            Ok(log) => {
                let dir = output::run_dir(out, &file_config.label(), s);
                output::write_run(&dir, &log)?;
                println!(
                    "seed {:>3}: {} episodes, AUC {:.0}, {} replacements -> {}",
                    s,
                    log.episodes.len(),
                    log.auc(),
                    log.events.len(),
                    dir.display()
                );
            }
            Err(e) => eprintln!("seed {}: FAILED: {}", s, e),
        }
    }
    Ok(())
}

fn cmd_sweep(config_path: &PathBuf, pilot_seeds: u64, final_seeds: u64, out: &PathBuf) -> Result<()> {
    let file_config = FileConfig::load(config_path)?;
    let experiment = file_config.to_experiment()?;
    if experiment.step_sizes.is_empty() {
        bail!("config has no step_sizes to sweep");
    }
    // the generate-and-test variant reuses the winner found with the
    // hand-designed good tasks
    let mut pilot = experiment.clone();
    if pilot.variant == Variant::GenerateAndTest {
        pilot.variant = Variant::HandGood;
        println!("piloting with hand_good tasks on behalf of generate_and_test");
    }
    let result = sweep(&pilot, pilot_seeds).map_err(|e| anyhow::anyhow!("sweep failed: {}", e))?;
    for entry in &result.entries {
        println!(
            "step size {:<10}: mean AUC {:>10.1}  ({} failed)",
            entry.step_size, entry.mean_auc, entry.failed_runs
        );
    }
    println!("winner: {}", result.best_step_size);

    let mut winner = experiment;
    winner.learner.step_size = result.best_step_size;
    for s in 0..final_seeds {
        match run_experiment(&winner, s) {
            Ok(log) => {
                let dir = output::run_dir(out, &file_config.label(), s);
                output::write_run(&dir, &log)?;
            }
            Err(e) => eprintln!("final seed {}: FAILED: {}", s, e),
        }
    }
    println!("final {}-seed runs written to {}", final_seeds, out.display());
    Ok(())
}

fn load_logs(dir: &PathBuf) -> Result<Vec<RunLog>> {
    let mut logs = Vec::new();
    let mut stack = vec![dir.clone()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).with_context(|| format!("reading {}", d.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "runlog.json") {
                let text = fs::read_to_string(&path)?;
                logs.push(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?);
            }
        }
    }
    if logs.is_empty() {
        bail!("no runlog.json files under {}", dir.display());
    }
    logs.sort_by_key(|l: &RunLog| l.seed);
    Ok(logs)
}

fn cmd_analyze(logs_dir: &PathBuf, out: &PathBuf, histogram: Option<&std::path::Path>, bins: usize) -> Result<()> {
    let logs = load_logs(logs_dir)?;
    let curve = learning_curve(&logs).map_err(|e| anyhow::anyhow!("{}", e))?;
    output::write_curve(out, &curve)?;
    println!(
        "{} runs, mean AUC {:.1} +- {:.1} -> {}",
        logs.len(),
        curve.mean_auc(),
        curve.auc_stderr(),
        out.display()
    );
    if let Some(path) = histogram {
        let hist = subgoal_histogram(&logs, bins);
        output::write_histogram(path, &hist)?;
        println!("histogram -> {}", path.display());
    }
    Ok(())
}

fn cmd_pool(from: &PathBuf, out: &PathBuf) -> Result<()> {
    let logs = load_logs(from)?;
    let pool = gnt_core::harness::collect_pool(&logs);
    if pool.is_empty() {
        bail!("no retained subgoals found in {}", from.display());
    }
    fs::write(out, serde_json::to_string_pretty(&pool)?)?;
    println!("pool of {} subgoals -> {}", pool.len(), out.display());
    Ok(())
}
