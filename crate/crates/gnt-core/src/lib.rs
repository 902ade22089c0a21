//! Generate-and-test auxiliary task discovery for reinforcement learning.
//!
//! A multi-headed value network is trained with Master-User gradient routing:
//! every head reads the full feature vector in the forward pass, but each
//! hidden feature receives gradient from exactly one owner task. A random
//! generator proposes subgoal-reaching auxiliary tasks, a tester scores each
//! task by the utility of the features it shapes, and a replacement loop
//! periodically swaps out the lowest-utility tasks.
//!
//! The crate is `no_std` + `alloc`; all IO, file formats, and the CLI live in
//! the companion `gnt-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod auxdiscovery;
pub mod envs;
pub mod harness;
pub mod netcore;
pub mod rl_core;
pub mod runlog;

pub use auxdiscovery::{AuxTask, GntConfig, SubgoalSpec, TesterState};
pub use envs::{Environment, GridWorld, Pinball};
pub use harness::{ExperimentConfig, Variant};
pub use netcore::{FeaturePartition, NetworkParams, OptimizerState};
pub use rl_core::{LearnerConfig, ReplayBuffer, Transition};
pub use runlog::RunLog;
