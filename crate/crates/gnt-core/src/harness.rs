//! Experiment orchestration: configuration, the outer training loop gluing
//! network, learner, tester, and environment together, baseline variants,
//! and the step-size sweep protocol.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::stable_rank;
use crate::auxdiscovery::{
    generate_task, instantaneous_utility, replacement_step, task_utility, tick_ages, AuxTask,
    GntConfig, SubgoalSpec, TesterError, TesterState,
};
use crate::envs::{Environment, GridWorld, Pinball, PinballConfig, TaskQuality};
use crate::netcore::{FeaturePartition, NetworkParams, OptimizerState};
use crate::rl_core::{dqn_step, epsilon_greedy, LearnError, LearnerConfig, ReplayBuffer, Transition};
use crate::runlog::{EpisodeRecord, RankRecord, RunLog, UtilityRecord};

/// Agent variant under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Plain DQN: zero auxiliary heads, every feature owned by the main task.
    NoAux,
    /// Hand-designed good subgoals, fixed.
    HandGood,
    /// Hand-designed bad subgoals, fixed.
    HandBad,
    /// Random subgoals drawn once, fixed.
    FixedRandom,
    /// Random generator plus utility tester with periodic replacement.
    GenerateAndTest,
    /// Tasks sampled from a previously discovered pool, fixed.
    FixedPool,
}

/// Which environment to build, either a named default or inline file content.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvConfig {
    FourRooms,
    Maze,
    Pinball,
    /// ASCII map contents plus episode cutoff.
    GridMap { map: String, cutoff: usize },
    /// Pinball config file contents.
    PinballText { text: String },
}

impl EnvConfig {
    pub fn build(&self) -> Environment {
        match self {
            EnvConfig::FourRooms => Environment::Grid(GridWorld::four_rooms()),
            EnvConfig::Maze => Environment::Grid(GridWorld::maze()),
            EnvConfig::Pinball => Environment::Pinball(Pinball::default_arena()),
            EnvConfig::GridMap { map, cutoff } => {
                Environment::Grid(GridWorld::from_ascii(map, *cutoff).expect("invalid map"))
            }
            EnvConfig::PinballText { text } => Environment::Pinball(Pinball::new(
                PinballConfig::parse(text).expect("invalid pinball config"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub variant: Variant,
    pub learner: LearnerConfig,
    pub gnt: GntConfig,
    pub hidden_dim: usize,
    pub episodes: usize,
    /// Subgoal pool for the `fixed_pool` variant.
    #[serde(default)]
    pub pool: Vec<SubgoalSpec>,
    /// How many tasks `fixed_pool` draws from the pool.
    #[serde(default)]
    pub pool_sample: usize,
    /// Candidate step-sizes for `sweep`.
    #[serde(default)]
    pub step_sizes: Vec<f64>,
    /// Record stable rank / utilities every episode when true.
    #[serde(default = "default_true")]
    pub log_metrics: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Four-rooms defaults: hidden 50, buffer 500, batch 16, sync 100;
    /// generate-and-test with n=8, age threshold 0, cycle 1000, ratio 0.25.
    pub fn four_rooms(variant: Variant) -> Self {
        ExperimentConfig {
            env: EnvConfig::FourRooms,
            variant,
            learner: LearnerConfig {
                step_size: 0.0175,
                buffer_capacity: 500,
                target_sync_period: 100,
                ..LearnerConfig::default()
            },
            gnt: GntConfig {
                n_tasks: 8,
                age_threshold: 0,
                replacement_cycle: 1000,
                replacement_ratio: 0.25,
                tau: 0.05,
            },
            hidden_dim: 50,
            episodes: 250,
            pool: Vec::new(),
            pool_sample: 8,
            step_sizes: vec![0.000625, 0.0025, 0.01, 0.04],
            log_metrics: true,
        }
    }

    /// Maze defaults: hidden 500, buffer 1000, same generate-and-test settings.
    pub fn maze(variant: Variant) -> Self {
        ExperimentConfig {
            env: EnvConfig::Maze,
            learner: LearnerConfig {
                step_size: 0.001,
                buffer_capacity: 1000,
                ..LearnerConfig::default()
            },
            hidden_dim: 500,
            episodes: 500,
            step_sizes: vec![0.00025, 0.001, 0.004],
            ..ExperimentConfig::four_rooms(variant)
        }
    }

    /// Pinball defaults: hidden 128, buffer 10000, sync 200; n=5, age
    /// threshold 5000, cycle 5000, ratio 0.2.
    pub fn pinball(variant: Variant) -> Self {
        ExperimentConfig {
            env: EnvConfig::Pinball,
            variant,
            learner: LearnerConfig {
                step_size: 0.005,
                buffer_capacity: 10_000,
                target_sync_period: 200,
                ..LearnerConfig::default()
            },
            gnt: GntConfig {
                n_tasks: 5,
                age_threshold: 5000,
                replacement_cycle: 5000,
                replacement_ratio: 0.2,
                tau: 0.05,
            },
            hidden_dim: 128,
            episodes: 150,
            pool: Vec::new(),
            pool_sample: 5,
            step_sizes: vec![0.0025, 0.005, 0.01],
            log_metrics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Diverged { seed: u64, step: u64 },
    EmptyPool,
    Tester(TesterError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Diverged { seed, step } => {
                write!(f, "run with seed {} diverged at step {}", seed, step)
            }
            RunError::EmptyPool => write!(f, "fixed_pool variant needs a nonempty pool"),
            RunError::Tester(e) => write!(f, "tester configuration error: {}", e),
        }
    }
}

impl From<TesterError> for RunError {
    fn from(e: TesterError) -> Self {
        RunError::Tester(e)
    }
}

/// Independent RNG stream `idx` for a run seed.
fn substream(seed: u64, idx: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (idx + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const STREAM_ENV: u64 = 0; // reserved for stochastic environments
const STREAM_INIT: u64 = 1;
const STREAM_ACTION: u64 = 2;
const STREAM_GENERATOR: u64 = 3;

fn initial_tasks<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    env: &Environment,
    rng: &mut R,
) -> Result<Vec<AuxTask>, RunError> {
    Ok(match config.variant {
        Variant::NoAux => Vec::new(),
        Variant::HandGood => env.hand_designed_tasks(TaskQuality::Good),
        Variant::HandBad => env.hand_designed_tasks(TaskQuality::Bad),
        Variant::FixedRandom | Variant::GenerateAndTest => (1..=config.gnt.n_tasks)
            .map(|id| generate_task(env, id, rng))
            .collect(),
        Variant::FixedPool => {
            if config.pool.is_empty() {
                return Err(RunError::EmptyPool);
            }
            let amount = config.pool_sample.min(config.pool.len()).max(1);
            let picks = rand::seq::index::sample(rng, config.pool.len(), amount);
            picks
                .iter()
                .enumerate()
                .map(|(i, p)| AuxTask::new(i + 1, config.pool[p]))
                .collect()
        }
    })
}

/// One full training run. Fully deterministic in `(config, seed)`.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunLog, RunError> {
    let _env_rng = substream(seed, STREAM_ENV);
    let mut init_rng = substream(seed, STREAM_INIT);
    let mut action_rng = substream(seed, STREAM_ACTION);
    let mut gen_rng = substream(seed, STREAM_GENERATOR);

    let mut env = config.env.build();
    let mut tasks = initial_tasks(config, &env, &mut gen_rng)?;
    let n_aux = tasks.len();
    let partition = if n_aux == 0 {
        FeaturePartition::all_main(config.hidden_dim)
    } else {
        FeaturePartition::equal_split(config.hidden_dim, n_aux)
    };
    let mut params = NetworkParams::init(
        env.obs_dim(),
        config.hidden_dim,
        env.n_actions(),
        n_aux + 1,
        &mut init_rng,
    )
    .expect("dimensions are positive");
    // Auxiliary tasks present at step 0 are newly created, exactly like
    // tasks produced by later replacement: their features start with zero
    // outgoing weights in every head, so weight on them has to be earned.
    for k in 0..config.hidden_dim {
        if partition.owner[k] != 0 {
            for head in &mut params.heads {
                for w in &mut head.weights[k] {
                    *w = 0.0;
                }
            }
        }
    }
    let mut opt = OptimizerState::new(&params, config.learner.rmsprop_decay, config.learner.rmsprop_guard);
    let mut target = params.sync_target();
    let mut buffer = ReplayBuffer::new(config.learner.buffer_capacity);
    let mut tester = TesterState::new(config.hidden_dim, config.gnt.tau);

    let mut log = RunLog::new(seed);
    log.initial_tasks = tasks.iter().map(|t| t.subgoal).collect();

    let mut global_step: u64 = 0;
    for episode in 0..config.episodes {
        let mut obs = env.reset();
        let mut ep_steps = 0usize;
        let mut ep_return = 0.0;
        loop {
            let (features, qs) = params.forward(&obs);
            if n_aux > 0 {
                tester.update(&instantaneous_utility(&features, &params.heads[0]));
            }
            let action = epsilon_greedy(&qs[0], config.learner.epsilon, &mut action_rng);
            let step = env.step(action);
            global_step += 1;
            ep_steps += 1;
            ep_return += step.reward;
            buffer.push(Transition {
                obs,
                action,
                reward: step.reward,
                next_obs: step.obs.clone(),
                terminal: step.terminal,
            });
            dqn_step(
                &mut params,
                &mut opt,
                &mut target,
                &buffer,
                &partition,
                &tasks,
                &config.learner,
                global_step,
                &mut action_rng,
            )
            .map_err(|LearnError::Diverged { step }| RunError::Diverged { seed, step })?;
            tick_ages(&mut tasks);
            if config.variant == Variant::GenerateAndTest {
                let events = replacement_step(
                    &mut tasks,
                    &mut tester,
                    &partition,
                    &mut params,
                    &mut opt,
                    &config.gnt,
                    global_step,
                    &env,
                    &mut gen_rng,
                )?;
                log.events.extend(events);
            }
            obs = step.obs;
            if step.terminal || step.truncated {
                break;
            }
        }
        log.episodes.push(EpisodeRecord { episode, steps: ep_steps, ret: ep_return });
        if config.log_metrics {
            let rank = stable_rank(&params.input_weights).unwrap_or(f64::NAN);
            log.ranks.push(RankRecord { episode, stable_rank: rank });
            for task in &tasks {
                log.utilities.push(UtilityRecord {
                    step: global_step,
                    task_id: task.task_id,
                    subgoal: task.subgoal,
                    utility: task_utility(&tester, &partition, task.task_id)?,
                    age: task.age,
                });
            }
        }
    }
    log.final_tasks = tasks.iter().map(|t| t.subgoal).collect();
    Ok(log)
}

/// Mean AUC of a step-size candidate over pilot seeds. Diverged runs
/// disqualify the candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub step_size: f64,
    pub mean_auc: f64,
    pub failed_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub best_step_size: f64,
}

/// 10-seed pilot per candidate step-size; the winner is the argmin mean AUC.
pub fn sweep(config: &ExperimentConfig, pilot_seeds: u64) -> Result<SweepResult, RunError> {
    assert!(!config.step_sizes.is_empty(), "sweep needs candidate step-sizes");
    let mut entries = Vec::new();
    for &step_size in &config.step_sizes {
        let mut candidate = config.clone();
        candidate.learner.step_size = step_size;
        candidate.log_metrics = false;
        let mut aucs = Vec::new();
        let mut failed = 0usize;
        for seed in 0..pilot_seeds {
            match run_experiment(&candidate, seed) {
                Ok(log) => aucs.push(log.auc()),
                Err(RunError::Diverged { .. }) => failed += 1,
                Err(e) => return Err(e),
            }
        }
        let mean_auc = if aucs.is_empty() || failed > 0 {
            f64::INFINITY
        } else {
            aucs.iter().sum::<f64>() / aucs.len() as f64
        };
        entries.push(SweepEntry { step_size, mean_auc, failed_runs: failed });
    }
    let best = entries
        .iter()
        .min_by(|a, b| a.mean_auc.partial_cmp(&b.mean_auc).unwrap())
        .expect("nonempty sweep");
    Ok(SweepResult { best_step_size: best.step_size, entries })
}

/// Run the `fixed_pool` variant against an explicit pool of retained subgoals.
pub fn fixed_pool_run(
    pool: &[SubgoalSpec],
    config: &ExperimentConfig,
    seed: u64,
) -> Result<RunLog, RunError> {
    let mut cfg = config.clone();
    cfg.variant = Variant::FixedPool;
    cfg.pool = pool.to_vec();
    run_experiment(&cfg, seed)
}

/// Collect the retained-at-end subgoals across runs into a pool.
pub fn collect_pool(logs: &[RunLog]) -> Vec<SubgoalSpec> {
    logs.iter().flat_map(|l| l.final_tasks.iter().copied()).collect()
}
