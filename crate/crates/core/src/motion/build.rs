use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::features::{Feature, FeatureKind, Step, SurfaceBox, Target, Term};
use super::{BoundLevel, MotionError, NlpSpec, Skeleton, Trajectory};
use crate::geometry::{Pose, Shape};
use crate::kinematics::{KinematicWorld, ModeSwitch, RobotKind};
use crate::symbolic::SymbolTable;

/// Minimum end-effector distance to barrier frames.
pub const CLEARANCE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub steps_per_phase: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { steps_per_phase: 20 }
    }
}

/// World-aligned bounding box of a shaped frame.
fn aabb(shape: &Shape, pose: &Pose) -> (Vector3<f64>, Vector3<f64>) {
    let c = pose.translation.vector;
    match *shape {
        Shape::Sphere { radius } => (c.add_scalar(-radius), c.add_scalar(radius)),
        Shape::Capsule { radius, length } => {
            let a = pose * Point3::new(0.0, 0.0, -length / 2.0);
            let b = pose * Point3::new(0.0, 0.0, length / 2.0);
            (a.coords.inf(&b.coords).add_scalar(-radius), a.coords.sup(&b.coords).add_scalar(radius))
        }
        Shape::Box { size } => {
            let h = size / 2.0;
            let mut lo = Vector3::repeat(f64::INFINITY);
            let mut hi = Vector3::repeat(f64::NEG_INFINITY);
            for sx in [-1.0, 1.0] {
                for sy in [-1.0, 1.0] {
                    for sz in [-1.0, 1.0] {
                        let p = pose * Point3::new(sx * h.x, sy * h.y, sz * h.z);
                        lo = lo.inf(&p.coords);
                        hi = hi.sup(&p.coords);
                    }
                }
            }
            (lo, hi)
        }
    }
}

fn surface_of(world: &KinematicWorld, frame: &str) -> Result<SurfaceBox, MotionError> {
    let f = world.frame(frame).ok_or_else(|| MotionError::NotASurface(frame.to_string()))?;
    let shape = f.shape.ok_or_else(|| MotionError::NotASurface(frame.to_string()))?;
    let (lo, hi) = aabb(&shape, &world.world_pose(frame)?);
    Ok(SurfaceBox { top: hi.z, x: (lo.x, hi.x), y: (lo.y, hi.y) })
}

fn half_height(world: &KinematicWorld, frame: &str) -> Result<f64, MotionError> {
    let shape = world.frame(frame).and_then(|f| f.shape);
    Ok(match shape {
        Some(s) => {
            let (lo, hi) = aabb(&s, &Pose::identity());
            (hi.z - lo.z) / 2.0
        }
        None => 0.0,
    })
}

struct Builder<'a> {
    world0: &'a KinematicWorld,
    features: Vec<Feature>,
    /// object -> border index of its latest placement within the skeleton
    placed: BTreeMap<String, usize>,
    num_border: usize,
    border_init: Vec<f64>,
    barriers: Vec<(Shape, Pose)>,
    end_effectors: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn new(world0: &'a KinematicWorld) -> Result<Self, MotionError> {
        let mut barriers = Vec::new();
        for f in world0.frames() {
            if f.name.starts_with("barrier") {
                if let Some(s) = f.shape {
                    barriers.push((s, world0.world_pose(&f.name)?));
                }
            }
        }
        let mut end_effectors = Vec::new();
        for r in world0.robots() {
            let ends: &[usize] = match r.kind {
                RobotKind::Crawler => &[0, 1],
                RobotKind::Arm => &[1],
                RobotKind::MobileBase => &[],
            };
            for &e in ends {
                end_effectors.push(world0.frame_index(&r.endpoints[e])?);
            }
        }
        Ok(Self {
            world0,
            features: Vec::new(),
            placed: BTreeMap::new(),
            num_border: 0,
            border_init: Vec::new(),
            barriers,
            end_effectors,
        })
    }

    fn push(&mut self, kind: FeatureKind, term: Term) {
        self.features.push(Feature::new(kind, term));
    }

    fn surface(&mut self, t: Step, frame: usize, surface: SurfaceBox) {
        self.push(FeatureKind::Eq, Term::SurfaceHeight { t, frame, surface });
        self.push(FeatureKind::Ineq, Term::SurfaceExtent { t, frame, surface });
    }

    /// Constraints holding at every step of a phase in mode `w`.
    fn mode_features(&mut self, w: &KinematicWorld, t: Step) -> Result<(), MotionError> {
        self.push(FeatureKind::Ineq, Term::JointLimit { t });
        for (robot, &end) in &w.mode.stance {
            if w.robot(robot)?.kind.stands_by_contact() {
                let frame = w.endpoint_frame(robot, end)?;
                self.push(FeatureKind::Eq, Term::StancePin { t, frame });
            }
        }
        for c in &w.mode.connections {
            let a = w.endpoint_frame(&c.a.0, c.a.1)?;
            let b = w.endpoint_frame(&c.b.0, c.b.1)?;
            self.push(FeatureKind::Eq, Term::PointCoincide { t, a, b });
        }
        for (obstacle, pose) in self.barriers.clone() {
            for frame in self.end_effectors.clone() {
                self.push(FeatureKind::Ineq, Term::Clearance { t, frame, obstacle, pose, margin: CLEARANCE_MARGIN });
            }
        }
        Ok(())
    }

    /// Constraints of the mode switch taking `w` to the next mode at step `t`.
    fn switch_features(&mut self, w: &KinematicWorld, switch: &ModeSwitch, t: Step) -> Result<(), MotionError> {
        match switch {
            ModeSwitch::Pick { robot, object } => {
                let (r, e) = w.free_end(robot)?;
                let frame = w.endpoint_frame(&r, e)?;
                let target = match self.placed.get(object) {
                    Some(&b) => Target::Border(b),
                    None => Target::Fixed(self.world0.world_pose(object)?.translation.vector),
                };
                self.push(FeatureKind::Eq, Term::PointTouch { t, frame, target });
            }
            ModeSwitch::Place { robot, object, surface } => {
                let (r, e) = w.free_end(robot)?;
                let frame = w.endpoint_frame(&r, e)?;
                let s = surface_of(self.world0, surface)?;
                let level = s.top + half_height(self.world0, object)?;
                let b = self.num_border;
                self.num_border += 1;
                self.border_init
                    .extend([(s.x.0 + s.x.1) / 2.0, (s.y.0 + s.y.1) / 2.0, level]);
                self.push(FeatureKind::Eq, Term::PointTouch { t, frame, target: Target::Border(b) });
                self.push(FeatureKind::Eq, Term::PlaceHeight { border: b, level });
                self.push(FeatureKind::Ineq, Term::PlaceExtent { border: b, surface: s });
                self.placed.insert(object.clone(), b);
            }
            ModeSwitch::Step { robot, to } => {
                let stance = *w.mode.stance.get(robot).ok_or_else(|| {
                    MotionError::Kinematics(crate::kinematics::KinematicsError::NoFreeEnd(robot.clone()))
                })?;
                let frame = w.endpoint_frame(robot, 1 - stance)?;
                let s = surface_of(self.world0, to)?;
                self.surface(t, frame, s);
            }
            ModeSwitch::StepTogether { lead, partner, to } | ModeSwitch::Disconnect { lead, partner, landing: to } => {
                let joined = w
                    .mode
                    .connections
                    .iter()
                    .find(|c| c.joins(lead, partner))
                    .and_then(|c| c.end_of(partner))
                    .ok_or_else(|| {
                        MotionError::Kinematics(crate::kinematics::KinematicsError::NotConnected(
                            lead.clone(),
                            partner.clone(),
                        ))
                    })?;
                let frame = w.endpoint_frame(partner, 1 - joined)?;
                let s = surface_of(self.world0, to)?;
                self.surface(t, frame, s);
            }
            ModeSwitch::Connect { lead, partner } => {
                let (ra, ea) = w.free_end(lead)?;
                let (rb, eb) = w.free_end(partner)?;
                let a = w.endpoint_frame(&ra, ea)?;
                let b = w.endpoint_frame(&rb, eb)?;
                self.push(FeatureKind::Eq, Term::PointCoincide { t, a, b });
            }
            ModeSwitch::None => {}
        }
        Ok(())
    }
}

fn mode_worlds(
    skeleton: &Skeleton,
    world: &KinematicWorld,
    symbols: &SymbolTable,
) -> Result<(Vec<KinematicWorld>, Vec<ModeSwitch>), MotionError> {
    let mut worlds = vec![world.clone()];
    let mut switches = Vec::new();
    for a in &skeleton.actions {
        let sw = ModeSwitch::from_action(a, symbols)?;
        let next = worlds.last().expect("non-empty").apply_mode_switch(&sw)?;
        worlds.push(next);
        switches.push(sw);
    }
    Ok((worlds, switches))
}

/// Keyframe-only NLP: one configuration per action.
pub fn build_sequence_nlp(
    skeleton: &Skeleton,
    world: &KinematicWorld,
    symbols: &SymbolTable,
) -> Result<NlpSpec, MotionError> {
    if skeleton.is_empty() {
        return Err(MotionError::EmptySkeleton);
    }
    let (worlds, switches) = mode_worlds(skeleton, world, symbols)?;
    let mut b = Builder::new(world)?;
    for (k, sw) in switches.iter().enumerate() {
        let t = (k + 1) as Step;
        b.push(FeatureKind::Cost, Term::Smoothness { t });
        b.mode_features(&worlds[k], t)?;
        b.switch_features(&worlds[k], sw, t)?;
    }
    Ok(finish(b, BoundLevel::Sequence, world, skeleton.len(), 1, None))
}

/// Full path NLP with `steps_per_phase` waypoints per action, optionally
/// continuing from a fixed prefix that ends at the world's configuration.
pub fn build_path_nlp(
    skeleton: &Skeleton,
    world: &KinematicWorld,
    symbols: &SymbolTable,
    prefix: Option<&Trajectory>,
    options: &BuildOptions,
) -> Result<NlpSpec, MotionError> {
    if skeleton.is_empty() {
        return Err(MotionError::EmptySkeleton);
    }
    let seam = match prefix {
        Some(p) => {
            let last = p.last();
            let x0 = &world.configuration.joints;
            if last.len() != x0.len() {
                return Err(MotionError::SeamMismatch { gap: f64::INFINITY });
            }
            let gap = last.iter().zip(x0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if gap > 1e-9 {
                return Err(MotionError::SeamMismatch { gap });
            }
            Some(p.tail_pair())
        }
        None => None,
    };
    let tpp = options.steps_per_phase.max(1);
    let (worlds, switches) = mode_worlds(skeleton, world, symbols)?;
    let mut b = Builder::new(world)?;
    for (k, sw) in switches.iter().enumerate() {
        for s in 1..=tpp {
            let t = (k * tpp + s) as Step;
            b.push(FeatureKind::Cost, Term::Acceleration { t });
            b.push(FeatureKind::Cost, Term::Velocity { t });
            b.mode_features(&worlds[k], t)?;
            if s == tpp {
                b.switch_features(&worlds[k], sw, t)?;
            }
        }
    }
    if seam.is_some() {
        b.push(FeatureKind::Eq, Term::SeamPosition);
        b.push(FeatureKind::Eq, Term::SeamVelocity);
    }
    Ok(finish(b, BoundLevel::Path, world, skeleton.len(), tpp, seam))
}

fn finish(
    b: Builder,
    level: BoundLevel,
    world: &KinematicWorld,
    k: usize,
    tpp: usize,
    seam: Option<[Vec<f64>; 2]>,
) -> NlpSpec {
    let x0 = world.configuration.joints.clone();
    let steps = k * tpp;
    let pre = match &seam {
        Some(s) => s.clone(),
        None => [x0.clone(), x0.clone()],
    };
    let mut init: Vec<f64> = Vec::with_capacity(steps * x0.len() + b.border_init.len());
    for _ in 0..steps {
        init.extend_from_slice(&x0);
    }
    init.extend_from_slice(&b.border_init);
    NlpSpec {
        level,
        world: Arc::new(world.clone()),
        dof: x0.len(),
        steps,
        steps_per_phase: tpp,
        num_border: b.num_border,
        pre,
        seam,
        features: b.features,
        init,
        phase_of_step: (0..steps).map(|s| s / tpp + 1).collect(),
    }
}
