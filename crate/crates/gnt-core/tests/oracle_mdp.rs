//! DQN sanity check against a value-iteration oracle on a tiny MDP.

use gnt_core::netcore::{FeaturePartition, NetworkParams, OptimizerState};
use gnt_core::rl_core::{dqn_step, epsilon_greedy, LearnerConfig, ReplayBuffer, Transition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic 2-state, 2-action MDP.
///
/// s0: a0 -> stay, r = 1;  a1 -> s1, r = 0
/// s1: a0 -> s0,  r = 2;  a1 -> stay, r = 0
fn mdp_step(state: usize, action: usize) -> (usize, f64) {
    match (state, action) {
        (0, 0) => (0, 1.0),
        (0, _) => (1, 0.0),
        (1, 0) => (0, 2.0),
        _ => (1, 0.0),
    }
}

/// Value iteration to the fixed point.
fn q_star(gamma: f64) -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..10_000 {
        let mut next = [[0.0f64; 2]; 2];
        let mut delta: f64 = 0.0;
        for s in 0..2 {
            for a in 0..2 {
                let (s2, r) = mdp_step(s, a);
                next[s][a] = r + gamma * q[s2][0].max(q[s2][1]);
                delta = delta.max((next[s][a] - q[s][a]).abs());
            }
        }
        q = next;
        if delta < 1e-12 {
            break;
        }
    }
    q
}

fn one_hot(state: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2];
    v[state] = 1.0;
    v
}

#[test]
fn dqn_converges_to_value_iteration_fixed_point() {
    let gamma = 0.5;
    let oracle = q_star(gamma);

    let config = LearnerConfig {
        step_size: 0.001,
        gamma_main: gamma,
        gamma_aux: 1.0,
        batch_size: 8,
        target_sync_period: 50,
        epsilon: 0.5,
        buffer_capacity: 200,
        rmsprop_decay: 0.99,
        rmsprop_guard: 1e-8,
        truncate_aux_at_terminal: true,
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
        let (next, reward) = mdp_step(state, action);
        buffer.push(Transition {
            obs: one_hot(state),
            action,
            reward,
            next_obs: one_hot(next),
            terminal: false,
        });
        dqn_step(
            &mut params, &mut opt, &mut target, &buffer, &partition, &[], &config, step, &mut rng,
        )
        .unwrap();
        state = next;
    }

    for s in 0..2 {
        let (_, qs) = params.forward(&one_hot(s));
        let greedy = if qs[0][0] >= qs[0][1] { 0 } else { 1 };
        let oracle_greedy = if oracle[s][0] >= oracle[s][1] { 0 } else { 1 };
        assert_eq!(greedy, oracle_greedy, "greedy policy differs in state {}", s);
        let max_q = qs[0][0].max(qs[0][1]);
        let oracle_max = oracle[s][0].max(oracle[s][1]);
        assert!(
            (max_q - oracle_max).abs() < 1e-2,
            "state {}: learned {} vs q* {}",
            s,
            max_q,
            oracle_max
        );
    }
}

/// With every feature owned by main and aux losses absent, the learner is
/// plain DQN: a run with empty task list must match one where the aux head
/// machinery is instantiated but receives no tasks.
#[test]
fn no_aux_reduces_to_plain_dqn() {
    let config = LearnerConfig {
        step_size: 0.01,
        gamma_main: 0.9,
        batch_size: 4,
        ..LearnerConfig::default()
    };
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut params = NetworkParams::init(2, 8, 2, 1, &mut rng).unwrap();
        let mut opt = OptimizerState::new(&params, 0.99, 1e-8);
        let mut target = params.sync_target();
        let mut buffer = ReplayBuffer::new(50);
        let partition = FeaturePartition::all_main(8);
        let mut state = 0usize;
        for step in 1..=500u64 {
            let (_, qs) = params.forward(&one_hot(state));
            let action = epsilon_greedy(&qs[0], 0.3, &mut rng);
            let (next, reward) = mdp_step(state, action);
            buffer.push(Transition {
                obs: one_hot(state),
                action,
                reward,
                next_obs: one_hot(next),
                terminal: false,
            });
            dqn_step(
                &mut params, &mut opt, &mut target, &buffer, &partition, &[], &config, step,
                &mut rng,
            )
            .unwrap();
            state = next;
        }
        params
    };
    assert_eq!(run(), run());
}
