#![allow(dead_code)]

use rhh_lgp::symbolic::{apply, applicable, is_goal, Domain, GroundAction, SymbolicState};

/// Every action sequence of length ≤ `depth` reaching the goal, stopping at the
/// first goal state and never revisiting a state on the current path.
pub fn enumerate_goal_plans(domain: &Domain, actions: &[GroundAction], depth: usize) -> Vec<Vec<usize>> {
    fn go(
        domain: &Domain,
        actions: &[GroundAction],
        path: &mut Vec<usize>,
        states: &mut Vec<SymbolicState>,
        depth: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let s = states.last().unwrap().clone();
        if is_goal(&s, &domain.goal) {
            out.push(path.clone());
            return;
        }
        if path.len() == depth {
            return;
        }
        for a in applicable(&s, actions) {
            let next = apply(&s, a).unwrap();
            if states.contains(&next) {
                continue;
            }
            let i = actions.iter().position(|b| b.key == a.key).unwrap();
            path.push(i);
            states.push(next);
            go(domain, actions, path, states, depth, out);
            states.pop();
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(domain, actions, &mut Vec::new(), &mut vec![domain.init.clone()], depth, &mut out);
    out
}

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rhh_lgp::driver::advance_state;
use rhh_lgp::kinematics::KinematicWorld;
use rhh_lgp::motion::{
    build_path_nlp, build_sequence_nlp, evaluate_features, solve, BuildOptions, NlpSpec, Skeleton, Term, Trajectory,
};
use rhh_lgp::scenes::{SceneSpec, Task, TaskId};

pub fn load(id: TaskId, n: usize) -> Task {
    Task::load(SceneSpec::new(id, n)).unwrap()
}

pub fn actions_by_key(task: &Task, keys: &[&str]) -> Vec<GroundAction> {
    let all = task.domain.ground().unwrap();
    keys.iter()
        .map(|k| all.iter().find(|a| a.key == *k).unwrap_or_else(|| panic!("no action {k}")).clone())
        .collect()
}

pub fn skeleton(task: &Task, keys: &[&str]) -> Skeleton {
    Skeleton::new(task.domain.init.clone(), actions_by_key(task, keys)).unwrap()
}

pub fn sequence_nlp(task: &Task, keys: &[&str]) -> NlpSpec {
    build_sequence_nlp(&skeleton(task, keys), &task.world, &task.domain.symbols).unwrap()
}

pub fn path_nlp(task: &Task, keys: &[&str]) -> NlpSpec {
    build_path_nlp(&skeleton(task, keys), &task.world, &task.domain.symbols, None, &BuildOptions::default()).unwrap()
}

/// Path NLP for `second` that continues the solved path of `first`.
pub fn seamed_path_nlp(task: &Task, first: &[&str], second: &[&str]) -> (NlpSpec, Trajectory) {
    let sk = skeleton(task, first);
    let seq = solve(&build_sequence_nlp(&sk, &task.world, &task.domain.symbols).unwrap(), 0);
    assert!(seq.feasible);
    let mut spec = build_path_nlp(&sk, &task.world, &task.domain.symbols, None, &BuildOptions::default()).unwrap();
    spec.seed_from_keyframes(&seq.trajectory);
    let path = solve(&spec, 0);
    assert!(path.feasible);
    let (world, state): (KinematicWorld, _) =
        advance_state(&sk.actions, &path.trajectory, &task.world, &task.domain.init, &task.domain.symbols).unwrap();
    let all = task.domain.ground().unwrap();
    let acts: Vec<GroundAction> = second.iter().map(|k| all.iter().find(|a| a.key == *k).unwrap().clone()).collect();
    let sk2 = Skeleton::new(state, acts).unwrap();
    let spec2 =
        build_path_nlp(&sk2, &world, &task.domain.symbols, Some(&path.trajectory), &BuildOptions::default()).unwrap();
    (spec2, path.trajectory)
}

pub fn term_name(t: &Term) -> &'static str {
    match t {
        Term::Acceleration { .. } => "acceleration",
        Term::Velocity { .. } => "velocity",
        Term::Smoothness { .. } => "smoothness",
        Term::JointLimit { .. } => "joint-limit",
        Term::SurfaceHeight { .. } => "surface-height",
        Term::SurfaceExtent { .. } => "surface-extent",
        Term::PointTouch { .. } => "point-touch",
        Term::PointCoincide { .. } => "point-coincide",
        Term::StancePin { .. } => "stance-pin",
        Term::Clearance { .. } => "clearance",
        Term::PlaceHeight { .. } => "place-height",
        Term::PlaceExtent { .. } => "place-extent",
        Term::SeamPosition => "seam-position",
        Term::SeamVelocity => "seam-velocity",
    }
}

fn term_step(t: &Term) -> Option<isize> {
    match *t {
        Term::Acceleration { t }
        | Term::Velocity { t }
        | Term::Smoothness { t }
        | Term::JointLimit { t }
        | Term::SurfaceHeight { t, .. }
        | Term::SurfaceExtent { t, .. }
        | Term::PointTouch { t, .. }
        | Term::PointCoincide { t, .. }
        | Term::StancePin { t, .. }
        | Term::Clearance { t, .. } => Some(t),
        Term::SeamPosition | Term::SeamVelocity => Some(2),
        Term::PlaceHeight { .. } | Term::PlaceExtent { .. } => None,
    }
}

/// Columns a term may depend on: its step and the two before, plus all border variables.
fn candidate_columns(spec: &NlpSpec, term: &Term) -> BTreeSet<usize> {
    let mut cols: BTreeSet<usize> = (spec.border_offset()..spec.num_vars()).collect();
    if let Some(t) = term_step(term) {
        for s in (t - 2)..=t {
            if s >= 1 && (s as usize) <= spec.steps {
                let o = (s as usize - 1) * spec.dof;
                cols.extend(o..o + spec.dof);
            }
        }
    }
    cols
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JacobianReport {
    pub points: usize,
    pub entries: usize,
    pub max_rel_err: f64,
}

/// Compares the analytic Jacobian of each feature kind in `spec` against
/// central differences (h = 1e-6) at `points` random points near the initial
/// guess. Relative error is `|fd - an| / max(|an|, 1)`.
pub fn check_feature_jacobians(spec: &NlpSpec, points: usize, seed: u64) -> BTreeMap<&'static str, JacobianReport> {
    let mut by_kind: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
    for (i, f) in spec.features.iter().enumerate() {
        by_kind.entry(term_name(&f.term)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let h = 1e-6;
    let mut out = BTreeMap::new();
    for (name, idx) in by_kind {
        let mut report = JacobianReport::default();
        for p in 0..points {
            let feature = spec.features[idx[p % idx.len()]].clone();
            let single = NlpSpec { features: vec![feature.clone()], ..spec.clone() };
            let x: Vec<f64> = spec.init.iter().map(|v| v + noise.sample(&mut rng)).collect();
            let ev = evaluate_features(&single, &x);
            let (values, rows) = if !ev.eq.is_empty() {
                (ev.eq, ev.eq_jac)
            } else if !ev.ineq.is_empty() {
                (ev.ineq, ev.ineq_jac)
            } else {
                (ev.cost_residuals, ev.cost_jac)
            };
            let mut cols = candidate_columns(spec, &feature.term);
            cols.extend(rows.iter().flat_map(|r| r.iter().map(|e| e.0)));
            for c in cols {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[c] += h;
                xm[c] -= h;
                let (ep, em) = (evaluate_features(&single, &xp), evaluate_features(&single, &xm));
                let (vp, vm) = if !ep.eq.is_empty() {
                    (ep.eq, em.eq)
                } else if !ep.ineq.is_empty() {
                    (ep.ineq, em.ineq)
                } else {
                    (ep.cost_residuals, em.cost_residuals)
                };
                for r in 0..values.len() {
                    let fd = (vp[r] - vm[r]) / (2.0 * h);
                    let an: f64 = rows[r].iter().filter(|e| e.0 == c).map(|e| e.1).sum();
                    let err = (fd - an).abs() / an.abs().max(1.0);
                    report.max_rel_err = report.max_rel_err.max(err);
                    report.entries += 1;
                }
            }
            report.points += 1;
        }
        out.insert(name, report);
    }
    out
}

/// Specs that together contain every feature kind.
pub fn feature_zoo() -> Vec<(&'static str, NlpSpec)> {
    let climb = load(TaskId::Climb2, 2);
    let arms = load(TaskId::ArmPnp, 1);
    let obstacle = load(TaskId::Obstacle, 1);
    let crawl = [
        "connect(c1,c2,floor,floor)",
        "stepTogether(c1,c2,floor,stair2)",
        "disconnect(c2,c1,stair2,stair1)",
        "touch(c1,target)",
    ];
    let handover = ["pick(a1,obj1,table0)", "place(a1,obj1,table1)", "pick(a2,obj1,table1)"];
    vec![
        ("climb path", path_nlp(&climb, &crawl)),
        ("climb keyframes", sequence_nlp(&climb, &crawl)),
        ("handover path", path_nlp(&arms, &handover)),
        ("obstacle path", path_nlp(&obstacle, &["step(c1,tile0,tile1)"])),
        (
            "seamed path",
            seamed_path_nlp(&climb, &["connect(c1,c2,floor,floor)"], &["stepTogether(c1,c2,floor,stair2)"]).0,
        ),
    ]
}
