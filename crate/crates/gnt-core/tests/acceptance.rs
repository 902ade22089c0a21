//! Acceptance gate: one test per criterion, each printing a single
//! `ACCEPTANCE <n> <name>: PASS|FAIL` line (visible with `--nocapture`)
//! before asserting. Criteria 4-8 share cached 10-seed four-rooms run
//! bundles, so run this target in release mode:
//!
//! ```sh
//! cargo test --release -p gnt-core --test acceptance -- --nocapture
//! ```

use std::sync::OnceLock;

use gnt_core::analysis::stable_rank;
use gnt_core::auxdiscovery::{instantaneous_utility, replacement_step};
use gnt_core::harness::{collect_pool, run_experiment, ExperimentConfig, Variant};
use gnt_core::envs::TaskQuality;
use gnt_core::netcore::{FeaturePartition, NetworkParams, OptimizerState};
use gnt_core::rl_core::{dqn_step, epsilon_greedy, LearnerConfig, ReplayBuffer, Transition};
use gnt_core::{GntConfig, GridWorld, Pinball, RunLog, SubgoalSpec, TesterState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {:>2} {:<24} {}  {}",
        criterion,
        name,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    assert!(pass, "criterion {} ({}) failed: {}", criterion, name, detail);
}

// ---------------------------------------------------------------- bundles

fn run_bundle(config: &ExperimentConfig) -> Vec<RunLog> {
    (0..SEEDS)
        .map(|seed| run_experiment(config, seed).expect("acceptance run diverged"))
        .collect()
}

fn bundle(cell: &'static OnceLock<Vec<RunLog>>, variant: Variant, metrics: bool) -> &'static [RunLog] {
    cell.get_or_init(|| {
        let mut cfg = ExperimentConfig::four_rooms(variant);
        cfg.log_metrics = metrics;
        run_bundle(&cfg)
    })
}

/// Four-rooms sweep winner on the grid {0.000625, 0.0025, 0.01, 0.04} for
/// every variant involved in criteria 6-7 (no_aux, fixed_random, and
/// hand_good, whose winner generate_and_test inherits), as measured by
/// 10-seed pilots. Criteria 6 and 7 compare variants under this sweep
/// protocol; criteria 4, 5, and 8 use the shipped four-rooms defaults.
const SWEPT_STEP_SIZE: f64 = 0.01;

fn swept_bundle(
    cell: &'static OnceLock<Vec<RunLog>>,
    variant: Variant,
    metrics: bool,
) -> &'static [RunLog] {
    cell.get_or_init(|| {
        let mut cfg = ExperimentConfig::four_rooms(variant);
        cfg.learner.step_size = SWEPT_STEP_SIZE;
        cfg.log_metrics = metrics;
        run_bundle(&cfg)
    })
}

static NO_AUX: OnceLock<Vec<RunLog>> = OnceLock::new();
static HAND_GOOD: OnceLock<Vec<RunLog>> = OnceLock::new();
static HAND_BAD: OnceLock<Vec<RunLog>> = OnceLock::new();
static GNT: OnceLock<Vec<RunLog>> = OnceLock::new();
static NO_AUX_SWEPT: OnceLock<Vec<RunLog>> = OnceLock::new();
static FIXED_RANDOM_SWEPT: OnceLock<Vec<RunLog>> = OnceLock::new();
static GNT_SWEPT: OnceLock<Vec<RunLog>> = OnceLock::new();

fn no_aux() -> &'static [RunLog] {
    bundle(&NO_AUX, Variant::NoAux, true)
}
fn gnt_runs() -> &'static [RunLog] {
    bundle(&GNT, Variant::GenerateAndTest, true)
}
fn no_aux_swept() -> &'static [RunLog] {
    swept_bundle(&NO_AUX_SWEPT, Variant::NoAux, false)
}
fn gnt_swept() -> &'static [RunLog] {
    swept_bundle(&GNT_SWEPT, Variant::GenerateAndTest, true)
}

fn aucs(logs: &[RunLog]) -> Vec<f64> {
    logs.iter().map(|l| l.auc()).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Paired per-seed difference b - a: (mean gap, standard error of the gap).
/// Positive mean means a is better (lower AUC).
fn paired_gap(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let m = mean(&d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
    (m, (var / d.len() as f64).sqrt())
}

// --------------------------------------------------------------- criteria

#[test]
fn criterion_1_gradient_masking() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..20 {
        let (obs_dim, hidden, actions, n_aux) = (6, 9, 3, 2);
        let params = NetworkParams::init(obs_dim, hidden, actions, 1 + n_aux, &mut rng).unwrap();
        let partition = FeaturePartition::equal_split(hidden, n_aux);
        let obs: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..actions).map(|_| rng.random_range(-1.0..1.0)).collect();

        // main loss L = 0.5 * sum_a (q0_a - y_a)^2
        let loss = |p: &NetworkParams| -> f64 {
            let (_, qs) = p.forward(&obs);
            qs[0].iter().zip(&y).map(|(q, t)| 0.5 * (q - t).powi(2)).sum()
        };
        let (features, qs) = params.forward(&obs);
        let mut dloss_dq = vec![vec![0.0; actions]; 1 + n_aux];
        for a in 0..actions {
            dloss_dq[0][a] = qs[0][a] - y[a];
        }
        let grads = params.backward_masked(&obs, &features, &dloss_dq, &partition);

        for k in 0..hidden {
            let owner = partition.owner[k];
            for j in 0..obs_dim {
                let g = grads.input_weights[k][j];
                if owner != 0 {
                    assert_eq!(g, 0.0, "aux-owned input weight got main gradient");
                    continue;
                }
                let h = 1e-5;
                let mut plus = params.clone();
                plus.input_weights[k][j] += h;
                let mut minus = params.clone();
                minus.input_weights[k][j] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let rel = (g - fd).abs() / fd.abs().max(1e-6);
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    let pass = worst_rel < 1e-4;
    report(1, "gradient_masking", pass, &format!("worst FD rel err {:.2e}", worst_rel));
}

#[test]
fn criterion_2_utility_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let hidden = 12;
        let actions = 4;
        let params = NetworkParams::init(5, hidden, actions, 1, &mut rng).unwrap();
        let features: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = instantaneous_utility(&features, &params.heads[0]);
        for k in 0..hidden {
            // Eq. 1 brute force: sum over actions of |w_ka * f_k|
            let brute: f64 = (0..actions)
                .map(|a| (params.heads[0].weights[k][a] * features[k]).abs())
                .sum();
            worst = worst.max((u[k] - brute).abs());
        }

        // Eq. 2 brute force: replay the EMA recursion
        let tau = 0.05;
        let mut tester = TesterState::new(hidden, tau);
        let mut oracle = vec![0.0f64; hidden];
        for _ in 0..50 {
            let inst: Vec<f64> = (0..hidden).map(|_| rng.random_range(0.0..2.0)).collect();
            tester.update(&inst);
            for k in 0..hidden {
                oracle[k] = (1.0 - tau) * oracle[k] + tau * inst[k];
            }
        }
        for k in 0..hidden {
            worst = worst.max((tester.traces[k] - oracle[k]).abs());
        }
    }
    let pass = worst < 1e-12;
    report(2, "utility_oracle", pass, &format!("worst abs err {:.2e}", worst));
}

#[test]
fn criterion_3_dqn_sanity() {
    // Deterministic 2-state, 2-action MDP.
    // s0: a0 -> stay, r = 1;  a1 -> s1, r = 0
    // s1: a0 -> s0,  r = 2;  a1 -> stay, r = 0
    let mdp = |s: usize, a: usize| -> (usize, f64) {
        match (s, a) {
            (0, 0) => (0, 1.0),
            (0, _) => (1, 0.0),
            (1, 0) => (0, 2.0),
            _ => (1, 0.0),
        }
    };
    let gamma = 0.5;
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..10_000 {
        let mut next = [[0.0f64; 2]; 2];
        for s in 0..2 {
            for a in 0..2 {
                let (s2, r) = mdp(s, a);
                next[s][a] = r + gamma * q[s2][0].max(q[s2][1]);
            }
        }
        q = next;
    }

    let config = LearnerConfig {
        step_size: 0.001,
        gamma_main: gamma,
        batch_size: 8,
        target_sync_period: 50,
        epsilon: 0.5,
        buffer_capacity: 200,
        ..LearnerConfig::default()
    };
    let one_hot = |s: usize| -> Vec<f64> {
        let mut v = vec![0.0; 2];
        v[s] = 1.0;
        v
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = NetworkParams::init(2, 16, 2, 1, &mut rng).unwrap();
    let mut opt = OptimizerState::new(&params, config.rmsprop_decay, config.rmsprop_guard);
    let mut target = params.sync_target();
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let partition = FeaturePartition::all_main(16);
    let mut state = 0usize;
    for step in 1..=5000u64 {
        let (_, qs) = params.forward(&one_hot(state));
        let action = epsilon_greedy(&qs[0], config.epsilon, &mut rng);
        let (next, reward) = mdp(state, action);
        buffer.push(Transition {
            obs: one_hot(state),
            action,
            reward,
            next_obs: one_hot(next),
            terminal: false,
        });
        dqn_step(&mut params, &mut opt, &mut target, &buffer, &partition, &[], &config, step, &mut rng)
            .unwrap();
        state = next;
    }

    let mut policy_ok = true;
    let mut worst: f64 = 0.0;
    for s in 0..2 {
        let (_, qs) = params.forward(&one_hot(s));
        let greedy = if qs[0][0] >= qs[0][1] { 0 } else { 1 };
        let oracle_greedy = if q[s][0] >= q[s][1] { 0 } else { 1 };
        policy_ok &= greedy == oracle_greedy;
        worst = worst.max((qs[0][greedy].max(qs[0][1 - greedy]) - q[s][0].max(q[s][1])).abs());
    }
    let pass = policy_ok && worst < 1e-2;
    report(3, "dqn_sanity", pass, &format!("policy ok: {}, max |q - q*| {:.4}", policy_ok, worst));
}

#[test]
fn criterion_4_tester_discrimination() {
    // 3 hallway + 4 corner tasks fixed for the whole run.
    let grid = GridWorld::four_rooms();
    let good = grid.hand_designed_subgoals(TaskQuality::Good);
    let bad = grid.hand_designed_subgoals(TaskQuality::Bad);
    let mut cfg = ExperimentConfig::four_rooms(Variant::FixedPool);
    cfg.pool = good.iter().chain(&bad).copied().collect();
    cfg.pool_sample = cfg.pool.len();
    cfg.gnt.n_tasks = cfg.pool.len();

    let mut wins = 0;
    for seed in 0..SEEDS {
        let log = run_experiment(&cfg, seed).expect("run diverged");
        let n = cfg.pool.len();
        let last = &log.utilities[log.utilities.len() - n..];
        let util_of = |set: &[SubgoalSpec]| -> f64 {
            let us: Vec<f64> = last
                .iter()
                .filter(|u| set.contains(&u.subgoal))
                .map(|u| u.utility)
                .collect();
            assert!(!us.is_empty());
            mean(&us)
        };
        if util_of(&good) > util_of(&bad) {
            wins += 1;
        }
    }
    let pass = wins >= 8;
    report(4, "tester_discrimination", pass, &format!("hallway > corner in {}/10 seeds", wins));
}

#[test]
fn criterion_5_hand_designed_ordering() {
    let good = aucs(bundle(&HAND_GOOD, Variant::HandGood, false));
    let none = aucs(no_aux());
    let bad = aucs(bundle(&HAND_BAD, Variant::HandBad, false));
    let (gap_gn, se_gn) = paired_gap(&good, &none);
    let (gap_nb, se_nb) = paired_gap(&none, &bad);
    let pass = gap_gn > se_gn && gap_nb > se_nb;
    report(
        5,
        "hand_designed_ordering",
        pass,
        &format!(
            "mean AUC good {:.0} < no_aux {:.0} < bad {:.0}; gaps {:.0}>{:.0}se, {:.0}>{:.0}se",
            mean(&good), mean(&none), mean(&bad), gap_gn, se_gn, gap_nb, se_nb
        ),
    );
}

#[test]
fn criterion_6_discovery_beats_baselines() {
    // Each variant at its swept step size, per the sweep protocol
    // (generate_and_test inherits the hand_good winner).
    let gnt = aucs(gnt_swept());
    let random = aucs(swept_bundle(&FIXED_RANDOM_SWEPT, Variant::FixedRandom, false));
    let none = aucs(no_aux_swept());
    let (gap_gr, se_gr) = paired_gap(&gnt, &random);
    let (gap_rn, se_rn) = paired_gap(&random, &none);
    let pass = gap_gr > se_gr && gap_rn > se_rn;
    report(
        6,
        "discovery_beats_baselines",
        pass,
        &format!(
            "mean AUC g&t {:.0} < fixed_random {:.0} < no_aux {:.0}; gaps {:.0}>{:.0}se, {:.0}>{:.0}se",
            mean(&gnt), mean(&random), mean(&none), gap_gr, se_gr, gap_rn, se_rn
        ),
    );
}

#[test]
fn criterion_7_pool_replay() {
    // Pool harvested from the swept generate_and_test runs; replay and the
    // baseline are compared at the same swept step size.
    let pool = collect_pool(gnt_swept());
    let mut cfg = ExperimentConfig::four_rooms(Variant::FixedPool);
    cfg.learner.step_size = SWEPT_STEP_SIZE;
    cfg.pool = pool;
    cfg.log_metrics = false;
    let replay = aucs(&run_bundle(&cfg));
    let none = aucs(no_aux_swept());
    let pass = mean(&replay) < mean(&none);
    report(
        7,
        "pool_replay",
        pass,
        &format!("mean AUC pool {:.0} < no_aux {:.0}", mean(&replay), mean(&none)),
    );
}

#[test]
fn criterion_8_stable_rank() {
    // unit values first
    let identity = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    let id_err = (stable_rank(&identity).unwrap() - 3.0).abs();
    let diag = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
    let diag_err = (stable_rank(&diag).unwrap() - 1.25).abs();

    let final_rank = |logs: &[RunLog]| -> f64 {
        let rs: Vec<f64> = logs.iter().map(|l| l.ranks.last().unwrap().stable_rank).collect();
        mean(&rs)
    };
    let rank_gnt = final_rank(gnt_runs());
    let rank_none = final_rank(no_aux());
    let pass = id_err < 1e-9 && diag_err < 1e-9 && rank_gnt > rank_none;
    report(
        8,
        "stable_rank",
        pass,
        &format!(
            "unit errs {:.1e}/{:.1e}; g&t {:.2} > no_aux {:.2}",
            id_err, diag_err, rank_gnt, rank_none
        ),
    );
}

#[test]
fn criterion_9_replacement_arithmetic() {
    let grid = GridWorld::four_rooms();
    let hidden = 18;
    let run_cycle = |age: u64, threshold: u64, step: u64| -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = NetworkParams::init(grid.obs_dim(), hidden, 4, 9, &mut rng).unwrap();
        let mut opt = OptimizerState::new(&params, 0.99, 1e-8);
        let partition = FeaturePartition::equal_split(hidden, 8);
        let cfg = GntConfig {
            n_tasks: 8,
            age_threshold: threshold,
            replacement_cycle: 1000,
            replacement_ratio: 0.25,
            tau: 0.05,
        };
        let mut tester = TesterState::new(hidden, 0.05);
        for (k, t) in tester.traces.iter_mut().enumerate() {
            *t = k as f64;
        }
        let mut tasks: Vec<_> = (1..=8)
            .map(|i| {
                let mut t = gnt_core::AuxTask::new(i, SubgoalSpec::Cell { row: 1, col: 1, obs_index: 14 });
                t.age = age;
                t
            })
            .collect();
        replacement_step(
            &mut tasks, &mut tester, &partition, &mut params, &mut opt, &cfg, step, &grid, &mut rng,
        )
        .unwrap()
        .len()
    };

    let every_cycle = (1..=3).all(|i| run_cycle(10_000, 0, i * 1000) == 2);
    let off_cycle = run_cycle(10_000, 0, 1500) == 0 && run_cycle(10_000, 0, 0) == 0;
    let protected = run_cycle(5000, 5000, 1000) == 0;
    let mature = run_cycle(5001, 5000, 1000) == 2;
    let pass = every_cycle && off_cycle && protected && mature;
    report(
        9,
        "replacement_arithmetic",
        pass,
        &format!(
            "2 per cycle: {}, off-cycle noop: {}, age 5000 protected: {}, age 5001 eligible: {}",
            every_cycle, off_cycle, protected, mature
        ),
    );
}

#[test]
fn criterion_10_pinball_physics() {
    let mut env = Pinball::default_arena();
    let drag = env.config.drag;
    let substeps = env.config.substeps;

    // drag closed form in free flight
    env.reset();
    env.step(2); // one -x impulse, heading into open space
    let (vx0, vy0) = env.velocity();
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        env.step(4); // nop
        let (vx, vy) = env.velocity();
        let decay = drag.powi((substeps * k) as i32);
        worst = worst.max((vx - vx0 * decay).abs().max((vy - vy0 * decay).abs()));
    }
    let drag_ok = worst < 1e-9;

    // never inside an obstacle under random play
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut env = Pinball::default_arena();
    env.reset();
    let mut penetrated = false;
    for _ in 0..2000 {
        let step = env.step(rng.random_range(0..5));
        penetrated |= env.in_obstacle(env.position());
        if step.terminal {
            env.reset();
        }
    }

    // rest + nop is a fixed point
    let mut env = Pinball::default_arena();
    env.reset();
    let before = env.position();
    env.step(4);
    let fixed = env.position() == before && env.velocity() == (0.0, 0.0);

    let pass = drag_ok && !penetrated && fixed;
    report(
        10,
        "pinball_physics",
        pass,
        &format!("drag err {:.1e}, penetration: {}, rest fixed point: {}", worst, penetrated, fixed),
    );
}
