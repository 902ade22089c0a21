//! Per-run record streams: episodes, task utilities, replacement events, and
//! stable-rank samples.

use alloc::vec::Vec;

use crate::auxdiscovery::SubgoalSpec;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UtilityRecord {
    pub step: u64,
    pub task_id: usize,
    pub subgoal: SubgoalSpec,
    pub utility: f64,
    pub age: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReplacementEvent {
    pub step: u64,
    pub task_id: usize,
    pub old_subgoal: SubgoalSpec,
    pub new_subgoal: SubgoalSpec,
    /// Utility of the task at the moment it was replaced.
    pub old_utility: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankRecord {
    pub episode: usize,
    pub stable_rank: f64,
}

/// Everything one `(config, seed)` run produces.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunLog {
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    pub utilities: Vec<UtilityRecord>,
    pub events: Vec<ReplacementEvent>,
    pub ranks: Vec<RankRecord>,
    /// Auxiliary subgoals at the start of the run, in task-id order.
    pub initial_tasks: Vec<SubgoalSpec>,
    /// Auxiliary subgoals retained at the end of the run, in task-id order.
    pub final_tasks: Vec<SubgoalSpec>,
}

impl RunLog {
    pub fn new(seed: u64) -> Self {
        RunLog {
            seed,
            episodes: Vec::new(),
            utilities: Vec::new(),
            events: Vec::new(),
            ranks: Vec::new(),
            initial_tasks: Vec::new(),
            final_tasks: Vec::new(),
        }
    }

    /// Area under the learning curve: total steps across episodes.
    pub fn auc(&self) -> f64 {
        self.episodes.iter().map(|e| e.steps as f64).sum()
    }
}
