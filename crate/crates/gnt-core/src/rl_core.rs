//! DQN machinery: replay buffer, epsilon-greedy behavior on the main head,
//! multi-head TD targets, and the per-step learning update.
//!
//! Targets are semi-gradient: they are computed from a synced target network
//! and treated as constants. Auxiliary heads learn off-policy from the main
//! behavior's replay data; the max operator in their targets implements each
//! subgoal GVF's greedy policy.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::auxdiscovery::AuxTask;
use crate::netcore::{
    rmsprop_update, FeaturePartition, Gradients, NetError, NetworkParams, OptimizerState,
};

/// One environment transition. `terminal` means true termination (the
/// bootstrap stops); cutoff-truncated transitions are stored with
/// `terminal = false`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity ring buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    next: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleError {
    /// Buffer holds fewer transitions than the requested batch.
    WarmingUp { have: usize, need: usize },
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleError::WarmingUp { have, need } => {
                write!(f, "replay buffer warming up: {} of {} transitions", have, need)
            }
        }
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        ReplayBuffer { data: Vec::with_capacity(capacity), capacity, next: 0 }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest transition is evicted first once the buffer is full.
    pub fn push(&mut self, transition: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(transition);
        } else {
            self.data[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<&Transition>, SampleError> {
        if self.data.len() < batch_size {
            return Err(SampleError::WarmingUp { have: self.data.len(), need: batch_size });
        }
        Ok((0..batch_size)
            .map(|_| &self.data[rng.random_range(0..self.data.len())])
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.data.iter()
    }
}

/// Base-learner hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LearnerConfig {
    pub step_size: f64,
    pub gamma_main: f64,
    /// Continuation value at non-subgoal states for auxiliary heads.
    pub gamma_aux: f64,
    pub batch_size: usize,
    pub target_sync_period: u64,
    pub epsilon: f64,
    pub buffer_capacity: usize,
    pub rmsprop_decay: f64,
    pub rmsprop_guard: f64,
    /// When true, auxiliary heads stop bootstrapping at environment
    /// termination as well as at the subgoal. When false they bootstrap
    /// through episode ends, so an unreachable subgoal's values keep drifting.
    pub truncate_aux_at_terminal: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            step_size: 0.01,
            gamma_main: 0.99,
            gamma_aux: 1.0,
            batch_size: 16,
            target_sync_period: 100,
            epsilon: 0.1,
            buffer_capacity: 500,
            rmsprop_decay: 0.99,
            rmsprop_guard: 1e-8,
            truncate_aux_at_terminal: true,
        }
    }
}

fn argmax_set(q: &[f64]) -> Vec<usize> {
    let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    q.iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(a, _)| a)
        .collect()
}

fn max_q(q: &[f64]) -> f64 {
    q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// With probability `1 - epsilon` the greedy action (ties broken uniformly),
/// otherwise a uniform action.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    debug_assert!(q.iter().all(|v| v.is_finite()));
    if epsilon > 0.0 && rng.random_range(0.0..1.0) < epsilon {
        rng.random_range(0..q.len())
    } else {
        let best = argmax_set(q);
        if best.len() == 1 {
            best[0]
        } else {
            best[rng.random_range(0..best.len())]
        }
    }
}

/// Per-sample, per-head target values for the taken action.
///
/// Main head: `r + gamma_main * max_a q0(s', a)`, zero bootstrap on terminal.
/// Auxiliary head `i`: cumulant -1, continuation 0 when `s'` is inside the
/// task's subgoal (and on environment termination when
/// `truncate_aux_at_terminal` is set), `gamma_aux` elsewhere.
pub fn compute_targets(
    batch: &[&Transition],
    target_params: &NetworkParams,
    tasks: &[AuxTask],
    gamma_main: f64,
    gamma_aux: f64,
    truncate_aux_at_terminal: bool,
) -> Vec<Vec<f64>> {
    let n_heads = target_params.n_heads();
    assert_eq!(n_heads, tasks.len() + 1, "one head per task plus main");
    batch
        .iter()
        .map(|tr| {
            let (_, next_qs) = target_params.forward(&tr.next_obs);
            let mut targets = vec![0.0; n_heads];
            targets[0] = if tr.terminal {
                tr.reward
            } else {
                tr.reward + gamma_main * max_q(&next_qs[0])
            };
            for task in tasks {
                let h = task.task_id;
                let reached = task.subgoal.contains(&tr.next_obs);
                targets[h] = if reached || (truncate_aux_at_terminal && tr.terminal) {
                    -1.0
                } else {
                    -1.0 + gamma_aux * max_q(&next_qs[h])
                };
            }
            targets
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnError {
    /// Loss or gradient went non-finite; the run has diverged.
    Diverged { step: u64 },
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::Diverged { step } => write!(f, "learner diverged at step {}", step),
        }
    }
}

/// One DQN update: sample a minibatch, build per-head squared-TD losses on the
/// taken action only, backpropagate with Master-User masking, and apply one
/// RMSProp step. Syncs the target network every `target_sync_period` steps.
///
/// Returns `Ok(false)` without updating while the buffer is warming up.
#[allow(clippy::too_many_arguments)]
pub fn dqn_step<R: Rng + ?Sized>(
    params: &mut NetworkParams,
    opt: &mut OptimizerState,
    target: &mut NetworkParams,
    buffer: &ReplayBuffer,
    partition: &FeaturePartition,
    tasks: &[AuxTask],
    config: &LearnerConfig,
    step: u64,
    rng: &mut R,
) -> Result<bool, LearnError> {
    let updated = match buffer.sample(config.batch_size, rng) {
        Err(SampleError::WarmingUp { .. }) => false,
        Ok(batch) => {
            let targets = compute_targets(
                &batch,
                target,
                tasks,
                config.gamma_main,
                config.gamma_aux,
                config.truncate_aux_at_terminal,
            );
            let n_heads = params.n_heads();
            let scale = 1.0 / config.batch_size as f64;
            let mut grads = Gradients::zeros(params);
            for (tr, target_values) in batch.iter().zip(&targets) {
                let (features, qs) = params.forward(&tr.obs);
                let mut dloss_dq = vec![vec![0.0; params.n_actions]; n_heads];
                for h in 0..n_heads {
                    let td = qs[h][tr.action] - target_values[h];
                    if !td.is_finite() {
                        return Err(LearnError::Diverged { step });
                    }
                    dloss_dq[h][tr.action] = td * scale;
                }
                params.backward_masked_into(&tr.obs, &features, &dloss_dq, partition, &mut grads);
            }
            rmsprop_update(params, &grads, opt, config.step_size)
                .map_err(|e| match e {
                    NetError::NonFiniteGradient | NetError::ZeroDimension => {
                        LearnError::Diverged { step }
                    }
                })?;
            true
        }
    };
    if step % config.target_sync_period == 0 {
        *target = params.sync_target();
    }
    Ok(updated)
}
