mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use proptest::prelude::*;
use rhh_lgp::heuristics::{HeuristicMode, PruneReason};
use rhh_lgp::scenes::{Task, TaskId};
use rhh_lgp::search::*;
use rhh_lgp::symbolic::{applicable, apply, is_goal, GroundAction, SymbolicState};

use common::*;

fn config(mode: HeuristicMode) -> SearchConfig {
    SearchConfig { mode, depth_limit: 8, ..Default::default() }
}

fn keys(plan: &[GroundAction]) -> Vec<&str> {
    plan.iter().map(|a| a.key.as_str()).collect()
}

#[test]
fn equal_priorities_pop_in_insertion_order() {
    let mut q = FifoQueue::default();
    for (node, p) in [(4, 1.0), (2, 1.0), (9, 0.5), (7, 1.0), (1, 0.5)] {
        q.push(node, p);
    }
    let order: Vec<usize> = std::iter::from_fn(|| q.pop()).collect();
    assert_eq!(order, vec![9, 1, 4, 2, 7]);
}

proptest! {
    #[test]
    fn uniform_scaling_keeps_the_pop_order(ps in prop::collection::vec(0u8..6, 1..30), alpha in 0.01f64..100.0) {
        let (mut a, mut b) = (FifoQueue::default(), FifoQueue::default());
        for (i, &p) in ps.iter().enumerate() {
            a.push(i, p as f64 * 0.5);
            b.push(i, p as f64 * 0.5 * alpha);
        }
        let oa: Vec<usize> = std::iter::from_fn(|| a.pop()).collect();
        let ob: Vec<usize> = std::iter::from_fn(|| b.pop()).collect();
        prop_assert_eq!(oa, ob);
    }
}

#[test]
fn node_at_the_depth_limit_has_no_children() {
    let t = load(TaskId::Climb2, 1);
    let all = t.domain.ground().unwrap();
    let cfg = SearchConfig { depth_limit: 0, ..config(HeuristicMode::None) };
    let mut s = Search::new(&t.world, &t.domain, &all, t.domain.init.clone(), None, cfg);
    assert!(s.expand(0).is_empty());
    assert_eq!(s.metrics.expanded, 1);
    assert_eq!(s.metrics.tree_nodes, 0);
}

#[test]
fn root_of_two_stair_scene_counts_pruned_children() {
    // c1 and c2 stand on the floor: both may step to stair1 (0.42 m) and connect either
    // way round; stepping to stair2 (1.70 m) and touching the target are out of reach
    let t = load(TaskId::Climb2, 2);
    let all = t.domain.ground().unwrap();
    assert_eq!(applicable(&t.domain.init, &all).len(), 8);
    let mut s = Search::new(&t.world, &t.domain, &all, t.domain.init.clone(), None, config(HeuristicMode::ActionSpecific));
    assert_eq!(s.queues.symbolic.pop(), Some(0));
    let kids = s.expand(0);
    let mut enqueued: Vec<&str> = kids.iter().map(|&k| all[s.nodes[k].action.unwrap()].key.as_str()).collect();
    enqueued.sort();
    assert_eq!(
        enqueued,
        ["connect(c1,c2,floor,floor)", "connect(c2,c1,floor,floor)", "step(c1,floor,stair1)", "step(c2,floor,stair1)"]
    );
    assert_eq!(s.metrics.tree_nodes, 8);
    assert_eq!(s.pruned.len(), 4);
    assert!(s.pruned.iter().all(|p| p.reason == PruneReason::Reach));
    assert_eq!(s.queues.symbolic.len(), 4);
}

#[test]
fn goal_nodes_go_to_the_sequence_queue_unexpanded() {
    let t = load(TaskId::Climb1, 1);
    let all = t.domain.ground().unwrap();
    let mut s = Search::new(&t.world, &t.domain, &all, t.domain.init.clone(), None, config(HeuristicMode::ActionSpecific));
    let mut iterations = 0;
    let found = loop {
        iterations += 1;
        match s.search_step() {
            StepOutcome::Found(f) => break f,
            StepOutcome::Continue => {}
            StepOutcome::Exhausted => panic!("exhausted"),
        }
    };
    assert!(iterations <= 5, "{iterations} iterations");
    assert_eq!(keys(&found.plan), ["step(c1,floor,stair1)", "touch(c1,target)"]);
    for n in &s.nodes {
        if is_goal(&n.state, &t.domain.goal) {
            assert!(s.nodes.iter().all(|m| m.parent != Some(n.id)), "goal node {} was expanded", n.id);
        }
    }
    assert_eq!(s.nodes[found.node].status, BoundStatus::PathFeasible);
}

#[test]
fn two_crawlers_one_stair_take_two_actions() {
    let t = load(TaskId::Climb2, 1);
    let all = t.domain.ground().unwrap();
    let mut s = Search::new(&t.world, &t.domain, &all, t.domain.init.clone(), None, config(HeuristicMode::ActionSpecific));
    let mut iterations = 0;
    let found = loop {
        iterations += 1;
        if let StepOutcome::Found(f) = s.search_step() {
            break f;
        }
        assert!(iterations < 100);
    };
    assert!(iterations <= 5, "{iterations} iterations");
    assert_eq!(found.plan.len(), 2);
    assert_eq!(found.plan[1].key, "touch(c1,target)");
}

#[test]
fn zero_node_budget_times_out_immediately() {
    let t = load(TaskId::Climb2, 1);
    let all = t.domain.ground().unwrap();
    let cfg = SearchConfig { node_budget: 0, ..config(HeuristicMode::ActionSpecific) };
    let run = run_inner_loop(&t.world, &t.domain, &all, t.domain.init.clone(), None, cfg);
    assert!(matches!(run.status, SearchStatus::Timeout));
    assert_eq!(run.metrics.expanded, 0);
    assert_eq!(run.metrics.tree_nodes, 0);
    assert_eq!(run.metrics.sol_len, None);
    let cfg = SearchConfig { time_budget: Duration::ZERO, ..config(HeuristicMode::ActionSpecific) };
    let run = run_inner_loop(&t.world, &t.domain, &all, t.domain.init.clone(), None, cfg);
    assert!(matches!(run.status, SearchStatus::Timeout));
}

#[test]
fn unreachable_goal_exhausts_the_queues() {
    let t = load(TaskId::Climb1, 2);
    let all = t.domain.ground().unwrap();
    let cfg = SearchConfig { depth_limit: 1, ..config(HeuristicMode::ActionSpecific) };
    let run = run_inner_loop(&t.world, &t.domain, &all, t.domain.init.clone(), None, cfg);
    assert!(matches!(run.status, SearchStatus::Exhausted));
}

/// All cycle-free action paths from `init` up to `depth`, goal states included.
fn all_paths(task: &Task, actions: &[GroundAction], depth: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut layer: Vec<(Vec<String>, Vec<SymbolicState>)> = vec![(vec![], vec![task.domain.init.clone()])];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (path, states) in &layer {
            let s = states.last().unwrap();
            for a in actions.iter().filter(|a| rhh_lgp::symbolic::is_applicable(s, a)) {
                let n = apply(s, a).unwrap();
                if states.contains(&n) {
                    continue;
                }
                let mut p = path.clone();
                p.push(a.key.clone());
                let mut st = states.clone();
                st.push(n);
                out.insert(p.clone());
                next.push((p, st));
            }
        }
        layer = next;
    }
    out
}

#[test]
fn no_heuristics_explores_breadth_first() {
    let t = load(TaskId::Climb2, 1);
    let all = t.domain.ground().unwrap();
    let depth = 3;
    let cfg = SearchConfig { depth_limit: depth, ..config(HeuristicMode::None) };
    let mut s = Search::new(&t.world, &t.domain, &all, t.domain.init.clone(), None, cfg);
    let mut calls = 0;
    let mut depths = Vec::new();
    while let Some(n) = s.queues.symbolic.pop() {
        depths.push(s.nodes[n].depth);
        s.expand(n);
        calls += 1;
    }
    assert!(depths.windows(2).all(|w| w[0] <= w[1]), "not layered: {depths:?}");
    assert_eq!(s.metrics.expanded, calls);
    assert!(s.pruned.is_empty());
    assert_eq!(s.metrics.tree_nodes, s.nodes.len() - 1);
    let explored: BTreeSet<Vec<String>> =
        (1..s.nodes.len()).map(|n| s.plan_of(n).into_iter().map(|a| a.key).collect()).collect();
    assert_eq!(explored, all_paths(&t, &all, depth));
}

#[test]
fn tree_nodes_count_pruned_children() {
    let t = load(TaskId::Climb2, 2);
    let all = t.domain.ground().unwrap();
    let (run, s) =
        Search::new(&t.world, &t.domain, &all, t.domain.init.clone(), None, config(HeuristicMode::ActionSpecific)).run();
    assert!(matches!(run.status, SearchStatus::Found(_)));
    assert_eq!(run.metrics.tree_nodes, s.nodes.len() - 1 + s.pruned.len());
    assert!(run.metrics.expanded <= run.metrics.tree_nodes);
}

#[test]
fn path_bound_only_follows_a_feasible_sequence_bound() {
    for (id, n) in [(TaskId::Climb2, 2), (TaskId::ArmPnp, 1), (TaskId::Climb1, 2)] {
        let t = load(id, n);
        let all = t.domain.ground().unwrap();
        let run = run_inner_loop(&t.world, &t.domain, &all, t.domain.init.clone(), None, config(HeuristicMode::ActionSpecific));
        assert!(!run.bounds.is_empty());
        for b in &run.bounds {
            if b.path.is_some() {
                assert_eq!(b.sequence, Some(true), "{b:?}");
            }
        }
    }
}

#[test]
fn search_is_deterministic() {
    let t = load(TaskId::Climb2, 2);
    let all = t.domain.ground().unwrap();
    let go = || run_inner_loop(&t.world, &t.domain, &all, t.domain.init.clone(), None, config(HeuristicMode::ActionSpecific));
    let (a, b) = (go(), go());
    let plan = |r: &SearchRun| match &r.status {
        SearchStatus::Found(f) => (keys(&f.plan).join(" "), f.path.trajectory.x.clone()),
        _ => panic!("not found"),
    };
    assert_eq!(plan(&a), plan(&b));
    let strip = |r: &SearchRun| SearchMetrics { time_s: 0.0, ..r.metrics };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.bounds, b.bounds);
}

#[test]
fn horizon_truncates_the_verified_skeleton() {
    let t = load(TaskId::Climb2, 2);
    let all = t.domain.ground().unwrap();
    let cfg = SearchConfig { horizon: 1, ..config(HeuristicMode::ActionSpecific) };
    let run = run_inner_loop(&t.world, &t.domain, &all, t.domain.init.clone(), None, cfg);
    let SearchStatus::Found(f) = run.status else { panic!("not found") };
    assert!(f.plan.len() > 1);
    assert_eq!(f.skeleton.actions.len(), 1);
    assert_eq!(f.skeleton.actions[0].key, f.plan[0].key);
}

#[test]
fn metrics_serialize_with_table_columns() {
    let m = SearchMetrics { tree_nodes: 5, expanded: 2, sol_len: Some(2), ..Default::default() };
    let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
    for k in ["time_s", "tree_nodes", "expanded", "seq_solves", "path_solves", "sol_len"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}
