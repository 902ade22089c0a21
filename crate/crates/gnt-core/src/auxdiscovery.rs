//! Subgoal-reaching auxiliary tasks, the random generator, the feature-utility
//! tester, and the periodic replacement controller.
//!
//! Each auxiliary task is a subgoal-reaching GVF: cumulant -1 everywhere,
//! greedy policy, continuation 0 inside the subgoal region and `gamma_aux`
//! elsewhere. The tester scores each hidden feature by how much it contributes
//! to the main head's action values, smooths the score with an exponential
//! moving average, and derives a task's utility as the sum over the features
//! it owns. Every `replacement_cycle` steps the lowest-utility tasks older
//! than the age threshold are replaced with freshly generated ones.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;
use rand::Rng;

use crate::netcore::{FeaturePartition, Head, NetworkParams, OptimizerState};
use crate::runlog::ReplacementEvent;

/// Where a subgoal lives in observation space.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SubgoalSpec {
    /// A gridworld cell; `obs_index` is the position of the cell in the
    /// one-hot observation.
    Cell { row: usize, col: usize, obs_index: usize },
    /// A disc in pinball's (x, y) plane.
    Region { x: f64, y: f64, radius: f64 },
}

impl SubgoalSpec {
    /// Whether an observation falls inside the subgoal region.
    pub fn contains(&self, obs: &[f64]) -> bool {
        match *self {
            SubgoalSpec::Cell { obs_index, .. } => obs[obs_index] > 0.5,
            SubgoalSpec::Region { x, y, radius } => {
                let dx = obs[0] - x;
                let dy = obs[1] - y;
                sqrt(dx * dx + dy * dy) <= radius
            }
        }
    }
}

impl fmt::Display for SubgoalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SubgoalSpec::Cell { row, col, .. } => write!(f, "{}:{}", row, col),
            SubgoalSpec::Region { x, y, .. } => write!(f, "{:.4}:{:.4}", x, y),
        }
    }
}

/// Anything that can propose a random subgoal from its observation space.
pub trait SubgoalSource {
    fn random_subgoal<R: Rng + ?Sized>(&self, rng: &mut R) -> SubgoalSpec;
}

/// A subgoal-reaching auxiliary task. `task_id` is also the head index.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AuxTask {
    pub task_id: usize,
    pub subgoal: SubgoalSpec,
    pub age: u64,
}

impl AuxTask {
    pub fn new(task_id: usize, subgoal: SubgoalSpec) -> Self {
        AuxTask { task_id, subgoal, age: 0 }
    }
}

/// Generate a fresh task with age zero.
pub fn generate_task<S: SubgoalSource, R: Rng + ?Sized>(
    source: &S,
    task_id: usize,
    rng: &mut R,
) -> AuxTask {
    AuxTask::new(task_id, source.random_subgoal(rng))
}

/// Per-feature utility traces.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TesterState {
    pub traces: Vec<f64>,
    pub tau: f64,
}

impl TesterState {
    pub fn new(hidden_dim: usize, tau: f64) -> Self {
        TesterState { traces: vec![0.0; hidden_dim], tau }
    }

    /// `trace <- (1 - tau) * trace + tau * u`, element-wise.
    pub fn update(&mut self, utilities: &[f64]) {
        assert_eq!(utilities.len(), self.traces.len(), "utility length mismatch");
        for (t, &u) in self.traces.iter_mut().zip(utilities) {
            *t = (1.0 - self.tau) * *t + self.tau * u;
        }
    }

    pub fn reset_features(&mut self, feature_indices: &[usize]) {
        for &k in feature_indices {
            self.traces[k] = 0.0;
        }
    }
}

/// Generate-and-test hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GntConfig {
    /// Number of auxiliary tasks.
    pub n_tasks: usize,
    /// Age threshold: only tasks with `age > age_threshold` may be replaced.
    pub age_threshold: u64,
    /// Replacement happens every `replacement_cycle` steps.
    pub replacement_cycle: u64,
    /// Fraction of tasks replaced per cycle.
    pub replacement_ratio: f64,
    /// Utility-trace parameter.
    pub tau: f64,
}

impl GntConfig {
    /// Tasks replaced per cycle: `floor(n * rho)`, at least one.
    pub fn replace_count(&self) -> usize {
        (((self.n_tasks as f64) * self.replacement_ratio) as usize).max(1)
    }
}

/// Instantaneous feature utility against the main head:
/// `u(f_k) = sum_a |w_ka^main * f_k|`, for every feature regardless of owner.
pub fn instantaneous_utility(features: &[f64], main_head: &Head) -> Vec<f64> {
    assert_eq!(features.len(), main_head.weights.len(), "feature length mismatch");
    features
        .iter()
        .enumerate()
        .map(|(k, &f)| main_head.weights[k].iter().map(|&w| libm::fabs(w * f)).sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TesterError {
    /// A task owns no features, which makes its utility undefined.
    TaskOwnsNoFeatures { task_id: usize },
}

impl fmt::Display for TesterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TesterError::TaskOwnsNoFeatures { task_id } => {
                write!(f, "task {} owns no features", task_id)
            }
        }
    }
}

/// Task utility: sum of the utility traces of the features the task owns.
pub fn task_utility(
    tester: &TesterState,
    partition: &FeaturePartition,
    task_id: usize,
) -> Result<f64, TesterError> {
    let mut sum = 0.0;
    let mut owned = 0usize;
    for (k, &owner) in partition.owner.iter().enumerate() {
        if owner == task_id {
            sum += tester.traces[k];
            owned += 1;
        }
    }
    if owned == 0 {
        return Err(TesterError::TaskOwnsNoFeatures { task_id });
    }
    Ok(sum)
}

/// Increase every task's age by one.
pub fn tick_ages(tasks: &mut [AuxTask]) {
    for task in tasks.iter_mut() {
        task.age += 1;
    }
}

/// The replacement loop body. Acts only when `step` is a positive multiple of
/// the replacement cycle; otherwise a no-op.
///
/// Among tasks with `age > age_threshold`, the `replace_count()` with lowest
/// utility (ties broken by lowest task id) are replaced by freshly generated
/// tasks. Their owned features are reinitialized and their utility traces and
/// ages reset to zero.
#[allow(clippy::too_many_arguments)]
pub fn replacement_step<S: SubgoalSource, R: Rng + ?Sized>(
    tasks: &mut [AuxTask],
    tester: &mut TesterState,
    partition: &FeaturePartition,
    params: &mut NetworkParams,
    opt: &mut OptimizerState,
    cfg: &GntConfig,
    step: u64,
    source: &S,
    rng: &mut R,
) -> Result<Vec<ReplacementEvent>, TesterError> {
    if step == 0 || step % cfg.replacement_cycle != 0 {
        return Ok(Vec::new());
    }
    let mut eligible: Vec<(f64, usize)> = Vec::new();
    for task in tasks.iter() {
        if task.age > cfg.age_threshold {
            let u = task_utility(tester, partition, task.task_id)?;
            eligible.push((u, task.task_id));
        }
    }
    eligible.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    eligible.truncate(cfg.replace_count());

    let mut events = Vec::with_capacity(eligible.len());
    for &(utility, task_id) in &eligible {
        let owned = partition.owned_by(task_id);
        let replacement = generate_task(source, task_id, rng);
        let slot = tasks.iter_mut().find(|t| t.task_id == task_id).unwrap();
        events.push(ReplacementEvent {
            step,
            task_id,
            old_subgoal: slot.subgoal,
            new_subgoal: replacement.subgoal,
            old_utility: utility,
        });
        *slot = replacement;
        params.reinit_features(opt, &owned, rng);
        tester.reset_features(&owned);
    }
    Ok(events)
}
