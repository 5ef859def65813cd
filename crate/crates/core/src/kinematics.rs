//! Frame forest, robot models, forward kinematics with position Jacobians,
//! and the kinematic mode switches triggered by symbolic actions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use nalgebra::{Point3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::geometry::{shape_distance, Pose, Shape};
use crate::symbolic::{GeometricTag, GroundAction, SymbolTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("scene line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("unknown robot `{0}`")]
    UnknownRobot(String),
    #[error("frame graph has a cycle through `{0}`")]
    Cycle(String),
    #[error("quaternion of frame `{0}` is not unit length")]
    NonUnitQuaternion(String),
    #[error("configuration has {got} values, world has {expected} degrees of freedom")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("robot `{name}` is not a valid {kind}: {msg}")]
    InvalidRobot { name: String, kind: &'static str, msg: String },
    #[error("frame `{0}` has no shape")]
    NoShape(String),
    #[error("object `{0}` is already attached")]
    AlreadyAttached(String),
    #[error("object `{0}` is not attached")]
    NotAttached(String),
    #[error("robots `{0}` and `{1}` are not connected")]
    NotConnected(String, String),
    #[error("robot `{0}` is already part of an assembly")]
    AlreadyConnected(String),
    #[error("robot `{0}` has no free end-effector")]
    NoFreeEnd(String),
    #[error("action `{0}` is missing a geometric argument")]
    MissingArgument(String),
    #[error("frame `{0}` is not a fixed root frame")]
    NotStatic(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointKind {
    Fixed,
    Revolute { axis: Unit<Vector3<f64>> },
    /// Translation along the frame's local x and y axes.
    Planar,
}

impl JointKind {
    pub fn dof(&self) -> usize {
        match self {
            JointKind::Fixed => 0,
            JointKind::Revolute { .. } => 1,
            JointKind::Planar => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub parent: Option<String>,
    pub relative: Pose,
    pub shape: Option<Shape>,
    pub joint: JointKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RobotKind {
    Crawler,
    MobileBase,
    Arm,
}

impl RobotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "crawler" => Some(Self::Crawler),
            "mobile-base" | "mobilebase" => Some(Self::MobileBase),
            "arm" => Some(Self::Arm),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Crawler => "crawler",
            Self::MobileBase => "mobile-base",
            Self::Arm => "arm",
        }
    }

    /// Crawlers stand on supports through contact; the others are grounded by their base joint.
    pub fn stands_by_contact(self) -> bool {
        self == Self::Crawler
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub kind: RobotKind,
    pub base: String,
    pub frames: Vec<String>,
    /// Indices into the world configuration vector.
    pub dofs: Vec<usize>,
    /// `[grounded endpoint, tool endpoint]`.
    pub endpoints: [String; 2],
    pub reach: f64,
}

impl RobotModel {
    pub fn dof(&self) -> usize {
        self.dofs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub joints: Vec<f64>,
    /// Poses of free-standing scene objects (not attached, not robot frames).
    pub object_poses: BTreeMap<String, Pose>,
}

/// A rigid link between two robot endpoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Connection {
    pub a: (String, usize),
    pub b: (String, usize),
}

impl Connection {
    pub fn involves(&self, robot: &str) -> bool {
        self.a.0 == robot || self.b.0 == robot
    }

    pub fn joins(&self, r1: &str, r2: &str) -> bool {
        (self.a.0 == r1 && self.b.0 == r2) || (self.a.0 == r2 && self.b.0 == r1)
    }

    pub fn end_of(&self, robot: &str) -> Option<usize> {
        if self.a.0 == robot {
            Some(self.a.1)
        } else if self.b.0 == robot {
            Some(self.b.1)
        } else {
            None
        }
    }
}

/// Structural mode: who stands on which end, who is connected, what is held.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mode {
    /// robot -> endpoint index resting on a support (absent while hanging in an assembly)
    pub stance: BTreeMap<String, usize>,
    pub connections: Vec<Connection>,
    /// object -> end-effector frame holding it
    pub attachments: BTreeMap<String, String>,
}

/// Geometric interpretation of a ground action.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeSwitch {
    Pick { robot: String, object: String },
    Place { robot: String, object: String, surface: String },
    Step { robot: String, to: String },
    StepTogether { lead: String, partner: String, to: String },
    Connect { lead: String, partner: String },
    Disconnect { lead: String, partner: String, landing: String },
    None,
}

impl ModeSwitch {
    pub fn from_action(action: &GroundAction, symbols: &SymbolTable) -> Result<Self, KinematicsError> {
        let arg = |i: usize| -> Result<String, KinematicsError> {
            action
                .arg(i)
                .map(|s| symbols.name(s).to_string())
                .ok_or_else(|| KinematicsError::MissingArgument(action.key.clone()))
        };
        Ok(match action.tag() {
            GeometricTag::Pick => ModeSwitch::Pick { robot: arg(0)?, object: arg(1)? },
            GeometricTag::Place => ModeSwitch::Place { robot: arg(0)?, object: arg(1)?, surface: arg(2)? },
            GeometricTag::Step => ModeSwitch::Step { robot: arg(0)?, to: arg(2)? },
            GeometricTag::StepTogether => ModeSwitch::StepTogether { lead: arg(0)?, partner: arg(1)?, to: arg(3)? },
            GeometricTag::Connect => ModeSwitch::Connect { lead: arg(0)?, partner: arg(1)? },
            GeometricTag::Disconnect => ModeSwitch::Disconnect { lead: arg(0)?, partner: arg(1)?, landing: arg(3)? },
            GeometricTag::None => ModeSwitch::None,
        })
    }
}

/// Revolute joint limit for crawlers and arms (radians).
pub const REVOLUTE_LIMIT: f64 = 2.8;
/// Planar base travel limit (meters).
pub const PLANAR_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicWorld {
    frames: Vec<Frame>,
    parent_idx: Vec<Option<usize>>,
    /// First configuration index of each frame's joint.
    joint_offset: Vec<Option<usize>>,
    /// For each frame, the frames with joints on the path from the root (inclusive).
    joint_chain: Vec<Vec<usize>>,
    index: BTreeMap<String, usize>,
    robots: Vec<RobotModel>,
    limits: Vec<(f64, f64)>,
    pub mode: Mode,
    pub configuration: Configuration,
}

/// World poses of all frames plus the data needed for point Jacobians.
#[derive(Debug, Clone)]
pub struct FkResult {
    pub poses: Vec<Pose>,
}

impl KinematicWorld {
    pub fn new(frames: Vec<Frame>, robot_decls: Vec<(RobotKind, String, String)>) -> Result<Self, KinematicsError> {
        // topological order: parents first
        let mut by_name: BTreeMap<String, Frame> = BTreeMap::new();
        for f in frames {
            by_name.insert(f.name.clone(), f);
        }
        let mut ordered: Vec<Frame> = Vec::new();
        let mut placed: BTreeSet<String> = BTreeSet::new();
        let mut remaining: Vec<String> = by_name.keys().cloned().collect();
        // keep declaration-independent but deterministic: repeatedly sweep
        while !remaining.is_empty() {
            let before = remaining.len();
            remaining.retain(|n| {
                let f = &by_name[n];
                let ready = match &f.parent {
                    None => true,
                    Some(p) => placed.contains(p),
                };
                if ready {
                    ordered.push(f.clone());
                    placed.insert(n.clone());
                }
                !ready
            });
            if remaining.len() == before {
                let bad = &remaining[0];
                let f = &by_name[bad];
                return Err(match &f.parent {
                    Some(p) if !by_name.contains_key(p) => KinematicsError::UnknownFrame(p.clone()),
                    _ => KinematicsError::Cycle(bad.clone()),
                });
            }
        }
        let index: BTreeMap<String, usize> = ordered.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
        let parent_idx: Vec<Option<usize>> =
            ordered.iter().map(|f| f.parent.as_ref().map(|p| index[p])).collect();
        let mut joint_offset = Vec::with_capacity(ordered.len());
        let mut limits = Vec::new();
        for f in &ordered {
            match f.joint {
                JointKind::Fixed => joint_offset.push(None),
                JointKind::Revolute { .. } => {
                    joint_offset.push(Some(limits.len()));
                    limits.push((-REVOLUTE_LIMIT, REVOLUTE_LIMIT));
                }
                JointKind::Planar => {
                    joint_offset.push(Some(limits.len()));
                    limits.push((-PLANAR_LIMIT, PLANAR_LIMIT));
                    limits.push((-PLANAR_LIMIT, PLANAR_LIMIT));
                }
            }
        }
        let mut joint_chain: Vec<Vec<usize>> = Vec::with_capacity(ordered.len());
        for i in 0..ordered.len() {
            let mut chain = match parent_idx[i] {
                Some(p) => joint_chain[p].clone(),
                None => Vec::new(),
            };
            if joint_offset[i].is_some() {
                chain.push(i);
            }
            joint_chain.push(chain);
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); ordered.len()];
        for (i, p) in parent_idx.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }

        let mut robots = Vec::new();
        let mut robot_frames: BTreeSet<usize> = BTreeSet::new();
        for (kind, base, name) in robot_decls {
            let &b = index.get(&base).ok_or_else(|| KinematicsError::UnknownFrame(base.clone()))?;
            // subtree under the base
            let mut members = vec![b];
            let mut k = 0;
            while k < members.len() {
                members.extend(children[members[k]].iter().copied());
                k += 1;
            }
            members.sort();
            let depth = |mut i: usize| {
                let mut d = 0;
                while let Some(p) = parent_idx[i] {
                    d += 1;
                    i = p;
                }
                d
            };
            let tip = *members
                .iter()
                .filter(|&&m| children[m].iter().all(|c| !members.contains(c)) && m != b)
                .max_by_key(|&&m| (depth(m), std::cmp::Reverse(m)))
                .ok_or_else(|| KinematicsError::InvalidRobot {
                    name: name.clone(),
                    kind: kind.as_str(),
                    msg: "no tool frame below the base".into(),
                })?;
            let dofs: Vec<usize> = members
                .iter()
                .filter_map(|&m| joint_offset[m].map(|o| (o, ordered[m].joint.dof())))
                .flat_map(|(o, n)| o..o + n)
                .collect();
            let revolute = members.iter().filter(|&&m| matches!(ordered[m].joint, JointKind::Revolute { .. })).count();
            let planar = members.iter().filter(|&&m| ordered[m].joint == JointKind::Planar).count();
            let invalid = |msg: String| KinematicsError::InvalidRobot { name: name.clone(), kind: kind.as_str(), msg };
            match kind {
                RobotKind::Crawler if revolute != 7 => return Err(invalid(format!("{revolute} revolute joints, expected 7"))),
                RobotKind::Arm if revolute != 7 => return Err(invalid(format!("{revolute} revolute joints, expected 7"))),
                RobotKind::MobileBase if planar != 1 => return Err(invalid("needs exactly one planar joint".into())),
                _ => {}
            }
            // structural length of the serial chain from base to tip
            let mut reach = 0.0;
            let mut i = tip;
            while i != b {
                reach += ordered[i].relative.translation.vector.norm();
                i = parent_idx[i].expect("tip lies below base");
            }
            if reach <= 0.0 {
                return Err(invalid("reach must be positive".into()));
            }
            robot_frames.extend(members.iter().copied());
            robots.push(RobotModel {
                name,
                kind,
                base: base.clone(),
                frames: members.iter().map(|&m| ordered[m].name.clone()).collect(),
                dofs,
                endpoints: [base, ordered[tip].name.clone()],
                reach,
            });
        }

        let object_poses = ordered
            .iter()
            .enumerate()
            .filter(|(i, f)| f.parent.is_none() && f.joint == JointKind::Fixed && !robot_frames.contains(i))
            .map(|(_, f)| (f.name.clone(), f.relative))
            .collect();
        let mode = Mode {
            stance: robots.iter().map(|r| (r.name.clone(), 0)).collect(),
            ..Mode::default()
        };
        let dof = limits.len();
        Ok(Self {
            frames: ordered,
            parent_idx,
            joint_offset,
            joint_chain,
            index,
            robots,
            limits,
            mode,
            configuration: Configuration { joints: vec![0.0; dof], object_poses },
        })
    }

    pub fn dof(&self) -> usize {
        self.limits.len()
    }

    pub fn limits(&self) -> &[(f64, f64)] {
        &self.limits
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.index.get(name).map(|&i| &self.frames[i])
    }

    pub fn frame_index(&self, name: &str) -> Result<usize, KinematicsError> {
        self.index.get(name).copied().ok_or_else(|| KinematicsError::UnknownFrame(name.to_string()))
    }

    pub fn robots(&self) -> &[RobotModel] {
        &self.robots
    }

    pub fn robot(&self, name: &str) -> Result<&RobotModel, KinematicsError> {
        self.robots.iter().find(|r| r.name == name).ok_or_else(|| KinematicsError::UnknownRobot(name.to_string()))
    }

    pub fn robot_owning_frame(&self, frame: &str) -> Option<&RobotModel> {
        self.robots.iter().find(|r| r.frames.iter().any(|f| f == frame))
    }

    fn joint_transform(&self, i: usize, q: &[f64]) -> Pose {
        match (self.frames[i].joint, self.joint_offset[i]) {
            (JointKind::Revolute { axis }, Some(o)) => {
                Pose::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&axis, q[o]))
            }
            (JointKind::Planar, Some(o)) => {
                Pose::from_parts(Translation3::new(q[o], q[o + 1], 0.0), UnitQuaternion::identity())
            }
            _ => Pose::identity(),
        }
    }

    /// World pose of every frame, composed root to leaf.
    pub fn fk(&self, q: &[f64]) -> Result<FkResult, KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch { expected: self.dof(), got: q.len() });
        }
        let mut poses: Vec<Pose> = Vec::with_capacity(self.frames.len());
        for (i, f) in self.frames.iter().enumerate() {
            let local = match self.parent_idx[i] {
                None => self.configuration.object_poses.get(&f.name).copied().unwrap_or(f.relative),
                Some(_) => f.relative,
            };
            let base = match self.parent_idx[i] {
                Some(p) => poses[p] * local,
                None => local,
            };
            poses.push(base * self.joint_transform(i, q));
        }
        Ok(FkResult { poses })
    }

    /// Frame name to world pose.
    pub fn forward_kinematics(&self, q: &Configuration) -> Result<BTreeMap<String, Pose>, KinematicsError> {
        let fk = self.fk(&q.joints)?;
        Ok(self.frames.iter().zip(fk.poses).map(|(f, p)| (f.name.clone(), p)).collect())
    }

    /// Non-zero columns of the position Jacobian of the origin of `frame`.
    pub fn position_jacobian(&self, fk: &FkResult, frame: usize) -> Vec<(usize, Vector3<f64>)> {
        let p = fk.poses[frame].translation.vector;
        let mut cols = Vec::new();
        for &j in &self.joint_chain[frame] {
            let o = self.joint_offset[j].expect("chain holds joint frames");
            let pose = &fk.poses[j];
            match self.frames[j].joint {
                JointKind::Revolute { axis } => {
                    let a = pose.rotation * axis.into_inner();
                    cols.push((o, a.cross(&(p - pose.translation.vector))));
                }
                JointKind::Planar => {
                    cols.push((o, pose.rotation * Vector3::x()));
                    cols.push((o + 1, pose.rotation * Vector3::y()));
                }
                JointKind::Fixed => {}
            }
        }
        cols
    }

    pub fn endpoint_frame(&self, robot: &str, end: usize) -> Result<usize, KinematicsError> {
        let r = self.robot(robot)?;
        self.frame_index(&r.endpoints[end])
    }

    /// Robots linked to `robot` through connections, sorted by name.
    pub fn assembly_of(&self, robot: &str) -> Vec<String> {
        assembly_of(&self.mode, robot)
    }

    /// The unoccupied tool endpoint of the assembly containing `robot`.
    pub fn free_end(&self, robot: &str) -> Result<(String, usize), KinematicsError> {
        free_end(self, &self.mode, robot)
    }

    /// Structural reach of the assembly containing `robot`.
    pub fn reach(&self, robot: &str) -> Result<f64, KinematicsError> {
        self.robot(robot)?;
        self.assembly_of(robot).iter().map(|r| self.robot(r).map(|m| m.reach)).sum()
    }

    /// Reach of an explicit set of robots treated as one serial chain.
    pub fn reach_of(&self, robots: &[String]) -> Result<f64, KinematicsError> {
        robots.iter().map(|r| self.robot(r).map(|m| m.reach)).sum()
    }

    /// Revolute joint count of the assembly containing `robot`.
    pub fn articulated_joints(&self, robot: &str) -> usize {
        self.assembly_of(robot)
            .iter()
            .filter_map(|r| self.robot(r).ok())
            .flat_map(|r| r.frames.iter())
            .filter(|f| matches!(self.frame(f).map(|f| f.joint), Some(JointKind::Revolute { .. })))
            .count()
    }

    /// Surface-to-surface distance between two shaped frames in the current configuration.
    pub fn support_distance(&self, a: &str, b: &str) -> Result<f64, KinematicsError> {
        let ia = self.frame_index(a)?;
        let ib = self.frame_index(b)?;
        let sa = self.frames[ia].shape.ok_or_else(|| KinematicsError::NoShape(a.to_string()))?;
        let sb = self.frames[ib].shape.ok_or_else(|| KinematicsError::NoShape(b.to_string()))?;
        if ia == ib {
            return Ok(0.0);
        }
        let fk = self.fk(&self.configuration.joints)?;
        Ok(shape_distance(&sa, &fk.poses[ia], &sb, &fk.poses[ib]))
    }

    pub fn world_pose(&self, frame: &str) -> Result<Pose, KinematicsError> {
        let i = self.frame_index(frame)?;
        Ok(self.fk(&self.configuration.joints)?.poses[i])
    }

    pub fn set_joints(&mut self, q: Vec<f64>) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch { expected: self.dof(), got: q.len() });
        }
        self.configuration.joints = q;
        Ok(())
    }

    /// Moves a fixed root frame that no robot owns, e.g. an obstacle shifted between episodes.
    pub fn move_static_frame(&mut self, name: &str, relative: Pose) -> Result<(), KinematicsError> {
        let i = self.frame_index(name)?;
        let f = &self.frames[i];
        if f.joint != JointKind::Fixed || f.parent.is_some() || self.robot_owning_frame(name).is_some() {
            return Err(KinematicsError::NotStatic(name.to_string()));
        }
        self.frames[i].relative = relative;
        self.configuration.object_poses.insert(name.to_string(), relative);
        Ok(())
    }

    /// Returns the world after `switch`, evaluated at the current configuration.
    /// Frame world poses are unchanged by every switch.
    pub fn apply_mode_switch(&self, switch: &ModeSwitch) -> Result<KinematicWorld, KinematicsError> {
        let mut next = self.clone();
        match switch {
            ModeSwitch::Pick { robot, object } => {
                if next.mode.attachments.contains_key(object) {
                    return Err(KinematicsError::AlreadyAttached(object.clone()));
                }
                let oi = next.frame_index(object)?;
                let (r, end) = next.free_end(robot)?;
                let ee = next.robot(&r)?.endpoints[end].clone();
                let fk = next.fk(&next.configuration.joints)?;
                let ei = next.frame_index(&ee)?;
                let rel = fk.poses[ei].inverse() * fk.poses[oi];
                next.reparent(oi, Some(ee.clone()), rel);
                next.configuration.object_poses.remove(object);
                next.mode.attachments.insert(object.clone(), ee);
            }
            ModeSwitch::Place { object, .. } => {
                if !next.mode.attachments.contains_key(object) {
                    return Err(KinematicsError::NotAttached(object.clone()));
                }
                let oi = next.frame_index(object)?;
                let pose = next.fk(&next.configuration.joints)?.poses[oi];
                next.reparent(oi, None, pose);
                next.configuration.object_poses.insert(object.clone(), pose);
                next.mode.attachments.remove(object);
            }
            ModeSwitch::Step { robot, .. } => {
                next.robot(robot)?;
                let s = *next.mode.stance.get(robot).ok_or_else(|| KinematicsError::NoFreeEnd(robot.clone()))?;
                next.mode.stance.insert(robot.clone(), 1 - s);
            }
            ModeSwitch::StepTogether { lead, partner, .. } => {
                let conn = next
                    .mode
                    .connections
                    .iter()
                    .find(|c| c.joins(lead, partner))
                    .cloned()
                    .ok_or_else(|| KinematicsError::NotConnected(lead.clone(), partner.clone()))?;
                let joined = conn.end_of(partner).expect("connection joins partner");
                next.mode.stance.remove(lead);
                next.mode.stance.insert(partner.clone(), 1 - joined);
            }
            ModeSwitch::Connect { lead, partner } => {
                for r in [lead, partner] {
                    next.robot(r)?;
                    if next.mode.connections.iter().any(|c| c.involves(r)) {
                        return Err(KinematicsError::AlreadyConnected(r.clone()));
                    }
                }
                let (_, le) = next.free_end(lead)?;
                let (_, pe) = next.free_end(partner)?;
                next.mode.connections.push(Connection { a: (lead.clone(), le), b: (partner.clone(), pe) });
                next.mode.connections.sort();
                next.mode.stance.remove(partner);
            }
            ModeSwitch::Disconnect { lead, partner, .. } => {
                let pos = next
                    .mode
                    .connections
                    .iter()
                    .position(|c| c.joins(lead, partner))
                    .ok_or_else(|| KinematicsError::NotConnected(lead.clone(), partner.clone()))?;
                let conn = next.mode.connections.remove(pos);
                let joined = conn.end_of(partner).expect("connection joins partner");
                next.mode.stance.insert(partner.clone(), 1 - joined);
            }
            ModeSwitch::None => {}
        }
        Ok(next)
    }

    /// Convenience wrapper resolving a ground action into a mode switch.
    pub fn apply_action(&self, action: &GroundAction, symbols: &SymbolTable) -> Result<KinematicWorld, KinematicsError> {
        self.apply_mode_switch(&ModeSwitch::from_action(action, symbols)?)
    }

    fn reparent(&mut self, frame: usize, parent: Option<String>, relative: Pose) {
        self.frames[frame].parent = parent;
        self.frames[frame].relative = relative;
        let frames = std::mem::take(&mut self.frames);
        let robots = self
            .robots
            .iter()
            .map(|r| (r.kind, r.base.clone(), r.name.clone()))
            .collect();
        let rebuilt = KinematicWorld::new(frames, robots).expect("reparenting keeps the forest valid");
        let KinematicWorld { frames, parent_idx, joint_offset, joint_chain, index, robots, limits, .. } = rebuilt;
        // joint layout is unchanged because only fixed object frames move
        debug_assert_eq!(limits.len(), self.limits.len());
        self.frames = frames;
        self.parent_idx = parent_idx;
        self.joint_offset = joint_offset;
        self.joint_chain = joint_chain;
        self.index = index;
        self.robots = robots;
    }

    pub fn to_scene_text(&self) -> String {
        let mut s = String::new();
        for f in &self.frames {
            let t = f.relative.translation.vector;
            let q = f.relative.rotation.quaternion();
            let _ = write!(
                s,
                "frame {} parent={} pos={},{},{} quat={},{},{},{}",
                f.name,
                f.parent.as_deref().unwrap_or("world"),
                t.x,
                t.y,
                t.z,
                q.w,
                q.i,
                q.j,
                q.k
            );
            if let Some(shape) = f.shape {
                match shape {
                    Shape::Box { size } => {
                        let _ = write!(s, " shape=box {} {} {}", size.x, size.y, size.z);
                    }
                    Shape::Sphere { radius } => {
                        let _ = write!(s, " shape=sphere {radius}");
                    }
                    Shape::Capsule { radius, length } => {
                        let _ = write!(s, " shape=capsule {radius} {length}");
                    }
                }
            }
            match f.joint {
                JointKind::Fixed => s.push_str(" joint=fixed"),
                JointKind::Planar => s.push_str(" joint=planar"),
                JointKind::Revolute { axis } => {
                    let _ = write!(s, " joint=revolute {},{},{}", axis.x, axis.y, axis.z);
                }
            }
            s.push('\n');
        }
        for r in &self.robots {
            let _ = writeln!(s, "robot {} base={} name={}", r.kind.as_str(), r.base, r.name);
        }
        s
    }

    pub fn parse_scene(text: &str) -> Result<Self, KinematicsError> {
        scene::parse(text)
    }
}

pub(crate) fn assembly_of(mode: &Mode, robot: &str) -> Vec<String> {
    let mut members: BTreeSet<String> = BTreeSet::new();
    members.insert(robot.to_string());
    loop {
        let before = members.len();
        for c in &mode.connections {
            if members.contains(&c.a.0) || members.contains(&c.b.0) {
                members.insert(c.a.0.clone());
                members.insert(c.b.0.clone());
            }
        }
        if members.len() == before {
            break;
        }
    }
    members.into_iter().collect()
}

/// Free tool endpoint of the assembly containing `robot` under `mode`.
pub(crate) fn free_end(world: &KinematicWorld, mode: &Mode, robot: &str) -> Result<(String, usize), KinematicsError> {
    let members = assembly_of(mode, robot);
    let mut candidates = Vec::new();
    for m in &members {
        let model = world.robot(m)?;
        for end in 0..2 {
            if model.kind != RobotKind::Crawler && end == 0 {
                continue;
            }
            let standing = mode.stance.get(m) == Some(&end);
            let joined = mode.connections.iter().any(|c| (c.a.0 == *m && c.a.1 == end) || (c.b.0 == *m && c.b.1 == end));
            if !standing && !joined {
                candidates.push((m.clone(), end));
            }
        }
    }
    // prefer the requested robot's own end when it has one
    candidates
        .iter()
        .find(|(r, _)| r == robot)
        .or_else(|| candidates.first())
        .cloned()
        .ok_or_else(|| KinematicsError::NoFreeEnd(robot.to_string()))
}

mod scene {
    use super::*;

    fn err(line: usize, msg: impl Into<String>) -> KinematicsError {
        KinematicsError::Parse { line, msg: msg.into() }
    }

    /// `key=value` pairs where a value may span several whitespace-separated tokens.
    fn fields(rest: &str) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for tok in rest.split_whitespace() {
            match tok.split_once('=') {
                Some((k, v)) => out.push((k.to_string(), v.to_string())),
                None => {
                    if let Some(last) = out.last_mut() {
                        last.1.push(' ');
                        last.1.push_str(tok);
                    }
                }
            }
        }
        out
    }

    fn floats(line: usize, s: &str, n: usize) -> Result<Vec<f64>, KinematicsError> {
        let v: Vec<f64> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| err(line, format!("bad number `{t}`"))))
            .collect::<Result<_, _>>()?;
        if v.len() != n {
            return Err(err(line, format!("expected {n} numbers in `{s}`")));
        }
        Ok(v)
    }

    pub(super) fn parse(text: &str) -> Result<KinematicWorld, KinematicsError> {
        let mut frames = Vec::new();
        let mut robots = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            match kw {
                "frame" => {
                    let (name, rest) = rest.trim().split_once(char::is_whitespace).unwrap_or((rest.trim(), ""));
                    if name.is_empty() || name.contains('=') {
                        return Err(err(line, "missing frame name"));
                    }
                    let mut frame = Frame {
                        name: name.to_string(),
                        parent: None,
                        relative: Pose::identity(),
                        shape: None,
                        joint: JointKind::Fixed,
                    };
                    let mut pos = Vector3::zeros();
                    let mut rot = UnitQuaternion::identity();
                    for (k, v) in fields(rest) {
                        match k.as_str() {
                            "parent" => frame.parent = (v != "world").then_some(v),
                            "pos" => {
                                let p = floats(line, &v, 3)?;
                                pos = Vector3::new(p[0], p[1], p[2]);
                            }
                            "quat" => {
                                let q = floats(line, &v, 4)?;
                                let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
                                if (quat.norm() - 1.0).abs() > 1e-9 {
                                    return Err(KinematicsError::NonUnitQuaternion(name.to_string()));
                                }
                                rot = UnitQuaternion::new_unchecked(quat);
                            }
                            "shape" => {
                                let (kind, dims) = v.split_once(' ').unwrap_or((v.as_str(), ""));
                                frame.shape = Some(match kind {
                                    "box" => {
                                        let d = floats(line, dims, 3)?;
                                        Shape::cuboid(d[0], d[1], d[2])
                                    }
                                    "sphere" => Shape::Sphere { radius: floats(line, dims, 1)?[0] },
                                    "capsule" => {
                                        let d = floats(line, dims, 2)?;
                                        Shape::Capsule { radius: d[0], length: d[1] }
                                    }
                                    other => return Err(err(line, format!("unknown shape `{other}`"))),
                                });
                            }
                            "joint" => {
                                let (kind, axis) = v.split_once(' ').unwrap_or((v.as_str(), ""));
                                frame.joint = match kind {
                                    "fixed" => JointKind::Fixed,
                                    "planar" => JointKind::Planar,
                                    "revolute" => {
                                        let a = floats(line, axis, 3)?;
                                        let v = Vector3::new(a[0], a[1], a[2]);
                                        if (v.norm() - 1.0).abs() > 1e-9 {
                                            return Err(err(line, "revolute axis must be a unit vector"));
                                        }
                                        JointKind::Revolute { axis: Unit::new_unchecked(v) }
                                    }
                                    other => return Err(err(line, format!("unknown joint `{other}`"))),
                                };
                            }
                            other => return Err(err(line, format!("unknown frame field `{other}`"))),
                        }
                    }
                    frame.relative = Pose::from_parts(Translation3::from(pos), rot);
                    frames.push(frame);
                }
                "robot" => {
                    let (kind, rest) = rest.trim().split_once(char::is_whitespace).unwrap_or((rest.trim(), ""));
                    let kind = RobotKind::parse(kind).ok_or_else(|| err(line, format!("unknown robot kind `{kind}`")))?;
                    let f = fields(rest);
                    let base = f
                        .iter()
                        .find(|(k, _)| k == "base")
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| err(line, "robot needs base="))?;
                    let name = f
                        .iter()
                        .find(|(k, _)| k == "name")
                        .map(|(_, v)| v.clone())
                        .unwrap_or_else(|| base.strip_suffix("_base").unwrap_or(&base).to_string());
                    robots.push((kind, base, name));
                }
                other => return Err(err(line, format!("unknown declaration `{other}`"))),
            }
        }
        KinematicWorld::new(frames, robots)
    }
}

/// Position of a frame origin as a point.
pub fn origin(pose: &Pose) -> Point3<f64> {
    Point3::from(pose.translation.vector)
}
