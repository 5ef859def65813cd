//! Motion NLPs for a fixed skeleton at two bound levels: keyframes only
//! (`BoundLevel::Sequence`) and the full discretized path (`BoundLevel::Path`).

mod banded;
mod build;
pub mod features;
mod solver;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::kinematics::{FkResult, KinematicWorld, KinematicsError};
use crate::symbolic::{apply, DomainError, GroundAction, SymbolicState};

pub use banded::BorderedBanded;
pub use build::{build_path_nlp, build_sequence_nlp, BuildOptions, CLEARANCE_MARGIN};
pub use features::{Feature, FeatureKind, Row, Step, SurfaceBox, Target, Term, VELOCITY_WEIGHT};
pub use solver::{solve, solve_with, SolverOptions};

use features::{evaluate_term, KinematicsAt, StepView};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("skeleton must contain at least one action")]
    EmptySkeleton,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("skeleton has {actions} actions but {states} states")]
    InconsistentSkeleton { actions: usize, states: usize },
    #[error("fixed prefix does not end at the current configuration (gap {gap})")]
    SeamMismatch { gap: f64 },
    #[error("frame `{0}` cannot serve as a support surface")]
    NotASurface(String),
}

/// Action sequence with the symbolic states it visits.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub actions: Vec<GroundAction>,
    pub states: Vec<SymbolicState>,
}

impl Skeleton {
    pub fn new(initial: SymbolicState, actions: Vec<GroundAction>) -> Result<Self, MotionError> {
        let mut states = vec![initial];
        for a in &actions {
            let next = apply(states.last().expect("non-empty"), a)?;
            states.push(next);
        }
        Ok(Self { actions, states })
    }

    pub fn from_parts(actions: Vec<GroundAction>, states: Vec<SymbolicState>) -> Result<Self, MotionError> {
        if states.len() != actions.len() + 1 {
            return Err(MotionError::InconsistentSkeleton { actions: actions.len(), states: states.len() });
        }
        for (k, a) in actions.iter().enumerate() {
            if apply(&states[k], a)? != states[k + 1] {
                return Err(MotionError::InconsistentSkeleton { actions: actions.len(), states: states.len() });
            }
        }
        Ok(Self { actions, states })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Cache key: the action keys joined.
    pub fn key(&self) -> String {
        self.actions.iter().map(|a| a.key.as_str()).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BoundLevel {
    Sequence,
    Path,
}

/// An immutable NLP: variable layout, features and initial guess.
#[derive(Debug, Clone)]
pub struct NlpSpec {
    pub level: BoundLevel,
    pub world: Arc<KinematicWorld>,
    pub dof: usize,
    /// Number of variable steps.
    pub steps: usize,
    pub steps_per_phase: usize,
    pub num_border: usize,
    /// Constant steps -1 and 0.
    pub pre: [Vec<f64>; 2],
    /// Last two waypoints of a fixed prefix, when present.
    pub seam: Option<[Vec<f64>; 2]>,
    pub features: Vec<Feature>,
    pub init: Vec<f64>,
    /// Phase (1-based action index) of each variable step.
    pub phase_of_step: Vec<usize>,
}

impl NlpSpec {
    pub fn num_vars(&self) -> usize {
        self.steps * self.dof + 3 * self.num_border
    }

    pub fn border_offset(&self) -> usize {
        self.steps * self.dof
    }

    pub fn count_rows(&self, kind: FeatureKind) -> usize {
        self.features.iter().filter(|f| f.kind == kind).map(|f| f.dim(self.dof)).sum()
    }

    pub fn count_terms(&self, pred: impl Fn(&Term) -> bool) -> usize {
        self.features.iter().filter(|f| pred(&f.term)).count()
    }

    /// Replaces the initial guess by piecewise-linear interpolation through
    /// the keyframes of a sequence-level solution.
    pub fn seed_from_keyframes(&mut self, keyframes: &Trajectory) {
        let t = self.steps_per_phase;
        let k = keyframes.waypoints.len();
        if self.level != BoundLevel::Path || k * t != self.steps {
            return;
        }
        let n = self.dof;
        for phase in 0..k {
            let from = if phase == 0 { &self.pre[1] } else { &keyframes.waypoints[phase - 1] };
            let to = &keyframes.waypoints[phase];
            for s in 1..=t {
                let a = s as f64 / t as f64;
                let o = (phase * t + s - 1) * n;
                for i in 0..n {
                    self.init[o + i] = (1.0 - a) * from[i] + a * to[i];
                }
            }
        }
        let b = self.border_offset();
        if keyframes.border.len() == 3 * self.num_border {
            self.init[b..].copy_from_slice(&keyframes.border);
        }
    }
}

/// Residuals and sparse Jacobians at one point.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub cost: f64,
    pub cost_residuals: Vec<f64>,
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
    pub cost_jac: Vec<Row>,
    pub eq_jac: Vec<Row>,
    pub ineq_jac: Vec<Row>,
}

impl Evaluation {
    pub fn max_eq_residual(&self) -> f64 {
        self.eq.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_ineq_violation(&self) -> f64 {
        self.ineq.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn is_finite(&self) -> bool {
        self.cost.is_finite() && self.eq.iter().chain(&self.ineq).all(|v| v.is_finite())
    }
}

struct StepKinematics<'a> {
    world: &'a KinematicWorld,
    /// Index `t + 1`.
    fks: Vec<Option<FkResult>>,
}

impl KinematicsAt for StepKinematics<'_> {
    fn at(&self, t: Step) -> &FkResult {
        self.fks[(t + 1) as usize].as_ref().expect("forward kinematics precomputed for step")
    }

    fn point_jacobian(&self, t: Step, frame: usize) -> Vec<(usize, nalgebra::Vector3<f64>)> {
        self.world.position_jacobian(self.at(t), frame)
    }
}

fn normalize(row: &mut Row) {
    row.sort_by_key(|e| e.0);
    row.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
}

/// Evaluates every feature at `x`. Pure; Jacobians are analytic.
pub fn evaluate_features(spec: &NlpSpec, x: &[f64]) -> Evaluation {
    assert_eq!(x.len(), spec.num_vars(), "variable vector does not match the spec");
    let view = StepView {
        x,
        dof: spec.dof,
        pre: &spec.pre,
        limits: spec.world.limits(),
        border_offset: spec.border_offset(),
        seam: spec.seam.as_ref(),
    };
    let needed: BTreeSet<Step> = spec.features.iter().flat_map(|f| f.kinematic_steps()).collect();
    let mut fks: Vec<Option<FkResult>> = vec![None; spec.steps + 2];
    for t in needed {
        fks[(t + 1) as usize] = Some(spec.world.fk(view.q(t)).expect("step dimension matches world"));
    }
    let kin = StepKinematics { world: &spec.world, fks };
    let mut ev = Evaluation::default();
    for f in &spec.features {
        let (out, jac) = match f.kind {
            FeatureKind::Cost => (&mut ev.cost_residuals, &mut ev.cost_jac),
            FeatureKind::Eq => (&mut ev.eq, &mut ev.eq_jac),
            FeatureKind::Ineq => (&mut ev.ineq, &mut ev.ineq_jac),
        };
        evaluate_term(&f.term, &view, &kin, out, jac);
    }
    for row in ev.cost_jac.iter_mut().chain(ev.eq_jac.iter_mut()).chain(ev.ineq_jac.iter_mut()) {
        normalize(row);
    }
    ev.cost = ev.cost_residuals.iter().map(|r| r * r).sum();
    ev
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

/// Solved configurations with finite-difference derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub level: BoundLevel,
    /// Constant steps -1 and 0 the waypoints continue from.
    pub pre: [Vec<f64>; 2],
    pub waypoints: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
    pub phase: Vec<usize>,
    pub border: Vec<f64>,
    pub cost: f64,
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    /// Stacked variable vector the trajectory was read from.
    pub x: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn from_solution(spec: &NlpSpec, x: Vec<f64>, ev: &Evaluation) -> Self {
        let n = spec.dof;
        let waypoints: Vec<Vec<f64>> = (0..spec.steps).map(|s| x[s * n..(s + 1) * n].to_vec()).collect();
        let at = |t: isize| -> &[f64] {
            if t <= 0 {
                &spec.pre[(t + 1) as usize]
            } else {
                &waypoints[t as usize - 1]
            }
        };
        let mut velocities = Vec::with_capacity(spec.steps);
        let mut accelerations = Vec::with_capacity(spec.steps);
        for t in 1..=spec.steps as isize {
            let (a, b, c) = (at(t), at(t - 1), at(t - 2));
            velocities.push((0..n).map(|i| a[i] - b[i]).collect());
            accelerations.push((0..n).map(|i| a[i] - 2.0 * b[i] + c[i]).collect());
        }
        Self {
            level: spec.level,
            pre: spec.pre.clone(),
            border: x[spec.border_offset()..].to_vec(),
            waypoints,
            velocities,
            accelerations,
            phase: spec.phase_of_step.clone(),
            cost: ev.cost,
            max_eq_residual: ev.max_eq_residual(),
            max_ineq_violation: ev.max_ineq_violation(),
            x,
        }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.waypoints.last().map(|w| w.as_slice()).unwrap_or(&self.pre[1])
    }

    /// The final two configurations, oldest first.
    pub fn tail_pair(&self) -> [Vec<f64>; 2] {
        let n = self.waypoints.len();
        match n {
            0 => self.pre.clone(),
            1 => [self.pre[1].clone(), self.waypoints[0].clone()],
            _ => [self.waypoints[n - 2].clone(), self.waypoints[n - 1].clone()],
        }
    }

    /// Keeps the waypoints of the first `phases` phases.
    pub fn truncate_phases(&self, phases: usize) -> Trajectory {
        let keep = self.phase.iter().take_while(|&&p| p <= phases).count();
        let mut t = self.clone();
        t.waypoints.truncate(keep);
        t.velocities.truncate(keep);
        t.accelerations.truncate(keep);
        t.phase.truncate(keep);
        t
    }

    /// One line per waypoint: `t=<step> phase=<k> q=<values>`.
    pub fn dump(&self) -> String {
        self.dump_from(0, 0)
    }

    pub fn dump_from(&self, step_offset: usize, phase_offset: usize) -> String {
        let mut s = String::new();
        for (i, (q, k)) in self.waypoints.iter().zip(&self.phase).enumerate() {
            let values: Vec<String> = q.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "t={} phase={} q={}", step_offset + i + 1, phase_offset + k, values.join(","));
        }
        s
    }
}

/// Verdict of one NLP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub feasible: bool,
    pub trajectory: Trajectory,
    /// Gauss-Newton steps over all attempts.
    pub iterations: usize,
    /// Augmented-Lagrangian outer iterations over all attempts.
    pub outer_iterations: usize,
    pub termination: Termination,
    pub restarts: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    level: BoundLevel,
    feasible: bool,
    termination: Termination,
    iterations: usize,
    outer_iterations: usize,
    restarts: usize,
    cost: f64,
    max_eq_residual: f64,
    max_ineq_violation: f64,
    steps: usize,
    phases: &'a [usize],
}

impl SolveResult {
    pub fn summary_json(&self) -> String {
        let mut phases: Vec<usize> = self.trajectory.phase.clone();
        phases.dedup();
        serde_json::to_string_pretty(&Summary {
            level: self.trajectory.level,
            feasible: self.feasible,
            termination: self.termination,
            iterations: self.iterations,
            outer_iterations: self.outer_iterations,
            restarts: self.restarts,
            cost: self.trajectory.cost,
            max_eq_residual: self.trajectory.max_eq_residual,
            max_ineq_violation: self.trajectory.max_ineq_violation,
            steps: self.trajectory.len(),
            phases: &phases,
        })
        .expect("summary serializes")
    }
}
