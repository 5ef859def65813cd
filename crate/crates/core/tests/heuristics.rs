mod common;

use approx::assert_relative_eq;
use rhh_lgp::heuristics::*;
use rhh_lgp::kinematics::KinematicWorld;
use rhh_lgp::scenes::{Task, TaskId};
use rhh_lgp::symbolic::{apply, Domain, GroundAction, SymbolicState};

use common::*;

const CRAWLER_REACH: f64 = 1.4;
const ARM_REACH: f64 = 1.05;

fn cost_in(world: &KinematicWorld, domain: &Domain, all: &[GroundAction], keys: &[&str]) -> CostToGo {
    let actions: Vec<GroundAction> = keys
        .iter()
        .map(|k| all.iter().find(|a| a.key == *k).unwrap_or_else(|| panic!("no action {k}")).clone())
        .collect();
    let mut states = vec![domain.init.clone()];
    for a in &actions {
        states.push(apply(states.last().unwrap(), a).unwrap_or_else(|e| panic!("{}: {e:?}", a.key)));
    }
    let sr: Vec<&SymbolicState> = states.iter().collect();
    let ar: Vec<&GroundAction> = actions.iter().collect();
    ActionHeuristics::new(world, domain, &domain.init).cost_to_go(&HeuristicContext { states: &sr, actions: &ar })
}

fn cost(task: &Task, keys: &[&str]) -> CostToGo {
    cost_in(&task.world, &task.domain, &task.domain.ground().unwrap(), keys)
}

#[test]
fn root_costs_nothing() {
    let t = load(TaskId::Climb2, 1);
    assert_eq!(cost(&t, &[]), CostToGo::finite(0.0));
}

#[test]
fn pick_out_of_reach_is_pruned() {
    let t = load(TaskId::ArmPnp, 1);
    // a2 base sphere at x=2.7 (r=0.05), obj1 box spans x in [-0.13,-0.07]: 2.72 m apart
    let c = cost(&t, &["pick(a2,obj1,table0)"]);
    assert!(c.is_pruned());
    assert_eq!(c.reason, Some(PruneReason::Reach));
    // a1 base at x=0.9: gap (0.97, 0.07, 0) minus radius is about 0.92 m
    assert!(0.97f64.hypot(0.07) - 0.05 < ARM_REACH);
    assert_eq!(cost(&t, &["pick(a1,obj1,table0)"]), CostToGo::finite(ACTION_COST));
}

#[test]
fn place_prefers_the_goal_tray() {
    let t = load(TaskId::ArmPnp, 1);
    let tray = cost(&t, &["pick(a2,obj1,table0)", "place(a2,obj1,tray)"]);
    let table = cost(&t, &["pick(a2,obj1,table0)", "place(a2,obj1,table1)"]);
    assert_eq!(tray, CostToGo::finite(GOAL_PLACE_COST));
    assert_eq!(table, CostToGo::finite(ACTION_COST));
    assert!(tray.value < table.value);
    // tray is 2.55 m from a1's base
    assert!(cost(&t, &["pick(a1,obj1,table0)", "place(a1,obj1,tray)"]).is_pruned());
}

#[test]
fn step_toward_the_target_beats_stepping_away() {
    let t = load(TaskId::Climb1, 2);
    let up = cost(&t, &["step(c1,floor,stair1)", "step(c1,stair1,stair2)"]);
    let down = cost(&t, &["step(c1,floor,stair1)", "step(c1,stair1,floor)"]);
    // target sphere (r=0.05) centred 0.6 m above stair2's top at x=1.75
    assert_relative_eq!(up.value, 1.0 + 0.55 / CRAWLER_REACH, epsilon = 1e-9);
    assert_relative_eq!(down.value, 1.0 + (1.75f64.hypot(2.4) - 0.05) / CRAWLER_REACH, epsilon = 1e-9);
    assert!(up.value < down.value);
}

#[test]
fn stride_of_two_stairs_needs_a_pair() {
    let t = load(TaskId::Climb2, 2);
    // floor edge to stair2 edge: (1.2, 1.2), about 1.70 m
    assert!(cost(&t, &["step(c1,floor,stair2)"]).is_pruned());
    let pair = cost(&t, &["connect(c1,c2,floor,floor)", "stepTogether(c1,c2,floor,stair2)"]);
    assert!(!pair.is_pruned(), "{pair:?}");
}

#[test]
fn connect_needs_supports_within_combined_reach() {
    let t = load(TaskId::Climb2, 4);
    assert_eq!(cost(&t, &["connect(c1,c2,floor,floor)"]), CostToGo::finite(ACTION_COST));
    let all = t.domain.ground().unwrap();
    // put c2 on stair4 without geometry, then ask to connect across 4.24 m
    let mut d = t.domain.clone();
    let on = |r: &str, s: &str| d.fact("on", &[r, s]).unwrap();
    let mut facts: Vec<_> = d.init.facts().iter().filter(|&f| *f != on("c2", "floor")).cloned().collect();
    facts.push(on("c2", "stair4"));
    d.init = SymbolicState::new(facts);
    assert!(cost_in(&t.world, &d, &all, &["connect(c1,c2,floor,stair4)"]).is_pruned());
}

#[test]
fn connect_and_disconnect_do_not_undo_each_other() {
    let t = load(TaskId::Climb2, 2);
    let c = cost(&t, &["connect(c1,c2,floor,floor)", "disconnect(c1,c2,floor,floor)"]);
    assert_eq!(c.reason, Some(PruneReason::Oscillation));
    let c = cost(&t, &["connect(c1,c2,floor,floor)", "disconnect(c1,c2,floor,floor)", "connect(c2,c1,floor,floor)"]);
    assert_eq!(c.reason, Some(PruneReason::Oscillation));
    let c = cost(
        &t,
        &["connect(c1,c2,floor,floor)", "stepTogether(c1,c2,floor,stair1)", "disconnect(c2,c1,stair1,floor)"],
    );
    assert_eq!(c, CostToGo::finite(ACTION_COST));
}

#[test]
fn untagged_actions_cost_their_depth() {
    let d = Domain::parse(
        "type thing\npredicate p 1\nobject x thing\naction poke (?a:thing) pre: add: (p ?a) del: tag: none\ninit:\ngoal: (p x)\n",
    )
    .unwrap();
    let w = KinematicWorld::parse_scene(BOUNDARY_SCENE).unwrap();
    let all = d.ground().unwrap();
    assert_eq!(cost_in(&w, &d, &all, &["poke(x)"]), CostToGo::finite(ACTION_COST));
}

const BOUNDARY_DOMAIN: &str = "\
type support
type crawler
predicate on 2
object a support
object b support
object c support
object r crawler
action step (?r:crawler ?from:support ?to:support) pre: !(= ?from ?to) (on ?r ?from) add: (on ?r ?to) del: (on ?r ?from) tag: step
init: (on r a)
goal: (on r c)
";

// links sum to exactly 1 m of reach; spheres of radius 0.5 at x = 0, 2 and 2.5
const BOUNDARY_SCENE: &str = "\
frame r_base parent=world pos=0,0,0 quat=1,0,0,0 shape=sphere 0.02 joint=planar
frame r_j1 parent=r_base pos=0,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_j2 parent=r_j1 pos=0.125,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_j3 parent=r_j2 pos=0.125,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_j4 parent=r_j3 pos=0.125,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_j5 parent=r_j4 pos=0.125,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_j6 parent=r_j5 pos=0.125,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_j7 parent=r_j6 pos=0.125,0,0 quat=1,0,0,0 joint=revolute 0,0,1
frame r_tip parent=r_j7 pos=0.25,0,0 quat=1,0,0,0 shape=sphere 0.02 joint=fixed
frame a parent=world pos=0,0,0 quat=1,0,0,0 shape=sphere 0.5 joint=fixed
frame b parent=world pos=2,0,0 quat=1,0,0,0 shape=sphere 0.5 joint=fixed
frame c parent=world pos=2.5,0,0 quat=1,0,0,0 shape=sphere 0.5 joint=fixed
robot crawler base=r_base name=r
";

#[test]
fn reach_boundary_is_inclusive() {
    let w = KinematicWorld::parse_scene(BOUNDARY_SCENE).unwrap();
    let d = Domain::parse(BOUNDARY_DOMAIN).unwrap();
    assert_eq!(w.reach("r").unwrap(), 1.0);
    let h = ActionHeuristics::new(&w, &d, &d.init);
    assert_eq!(h.support_distance("a", "b"), 1.0);
    let all = d.ground().unwrap();
    assert!(!cost_in(&w, &d, &all, &["step(r,a,b)"]).is_pruned());
    assert!(cost_in(&w, &d, &all, &["step(r,a,c)"]).is_pruned());
}

#[test]
fn pruning_is_absorbing_for_the_search() {
    // a pruned child never reaches a queue, so nothing below it is evaluated
    let t = load(TaskId::ArmPnp, 1);
    let all = t.domain.ground().unwrap();
    let pruned = cost(&t, &["pick(a2,obj1,table0)"]);
    assert!(pruned.is_pruned());
    let mut s = rhh_lgp::search::Search::new(
        &t.world,
        &t.domain,
        &all,
        t.domain.init.clone(),
        None,
        rhh_lgp::search::SearchConfig { mode: HeuristicMode::ActionSpecific, ..Default::default() },
    );
    let kids = s.expand(0);
    for k in kids {
        assert!(!s.plan_of(k).iter().any(|a| a.key == "pick(a2,obj1,table0)"));
    }
}
