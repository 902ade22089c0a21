//! The three episodic evaluation environments.

mod gridworld;
mod pinball;

pub use gridworld::{GridWorld, MapError};
pub use pinball::{Pinball, PinballConfig, PinballConfigError, DEFAULT_PINBALL_CONFIG};

use alloc::vec::Vec;

use rand::Rng;

use crate::auxdiscovery::{AuxTask, SubgoalSpec, SubgoalSource};

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// True termination (goal reached); bootstrap stops.
    pub terminal: bool,
    /// Episode cutoff; the episode ends but bootstrap continues.
    pub truncated: bool,
}

/// Which hand-designed task set to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TaskQuality {
    Good,
    Bad,
}

/// An episodic environment with a subgoal support for the task generator.
pub enum Environment {
    Grid(GridWorld),
    Pinball(Pinball),
}

impl Environment {
    pub fn obs_dim(&self) -> usize {
        match self {
            Environment::Grid(g) => g.obs_dim(),
            Environment::Pinball(p) => p.obs_dim(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Environment::Grid(_) => 4,
            Environment::Pinball(_) => 5,
        }
    }

    pub fn reset(&mut self) -> Vec<f64> {
        match self {
            Environment::Grid(g) => g.reset(),
            Environment::Pinball(p) => p.reset(),
        }
    }

    pub fn step(&mut self, action: usize) -> Step {
        match self {
            Environment::Grid(g) => g.step(action),
            Environment::Pinball(p) => p.step(action),
        }
    }

    /// Hand-designed good/bad subgoal sets, numbered as tasks `1..=len`.
    pub fn hand_designed_tasks(&self, quality: TaskQuality) -> Vec<AuxTask> {
        let subgoals = match self {
            Environment::Grid(g) => g.hand_designed_subgoals(quality),
            Environment::Pinball(p) => p.hand_designed_subgoals(quality),
        };
        subgoals
            .into_iter()
            .enumerate()
            .map(|(i, s)| AuxTask::new(i + 1, s))
            .collect()
    }
}

impl SubgoalSource for Environment {
    fn random_subgoal<R: Rng + ?Sized>(&self, rng: &mut R) -> SubgoalSpec {
        match self {
            Environment::Grid(g) => g.random_subgoal(rng),
            Environment::Pinball(p) => p.random_subgoal(rng),
        }
    }
}
