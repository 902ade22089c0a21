//! Replaying a run's replacement events from its initial task set must
//! reproduce the retained task set, and the age/eligibility bookkeeping in
//! the log must be internally consistent.

use gnt_core::harness::{run_experiment, ExperimentConfig, Variant};

#[test]
fn event_log_replays_to_final_task_set() {
    let mut cfg = ExperimentConfig::four_rooms(Variant::GenerateAndTest);
    cfg.episodes = 60; // enough steps for several replacement cycles
    let log = run_experiment(&cfg, 11).unwrap();
    assert!(!log.events.is_empty(), "expected at least one replacement");

    let mut tasks = log.initial_tasks.clone();
    for ev in &log.events {
        assert_eq!(tasks[ev.task_id - 1], ev.old_subgoal, "event log out of order");
        tasks[ev.task_id - 1] = ev.new_subgoal;
    }
    assert_eq!(tasks, log.final_tasks);
}

#[test]
fn replacements_only_on_cycle_boundaries() {
    let mut cfg = ExperimentConfig::four_rooms(Variant::GenerateAndTest);
    cfg.episodes = 60;
    let log = run_experiment(&cfg, 3).unwrap();
    for ev in &log.events {
        assert_eq!(ev.step % cfg.gnt.replacement_cycle, 0);
    }
}

#[test]
fn logged_ages_match_steps_since_creation() {
    let mut cfg = ExperimentConfig::four_rooms(Variant::GenerateAndTest);
    cfg.episodes = 60;
    let log = run_experiment(&cfg, 5).unwrap();
    // replay creation times from the event log
    let mut created = vec![0u64; cfg.gnt.n_tasks + 1];
    let mut events = log.events.iter().peekable();
    for rec in &log.utilities {
        while let Some(ev) = events.peek() {
            if ev.step <= rec.step {
                created[ev.task_id] = ev.step;
                events.next();
            } else {
                break;
            }
        }
        assert_eq!(
            rec.age,
            rec.step - created[rec.task_id],
            "task {} at step {}",
            rec.task_id,
            rec.step
        );
    }
}
