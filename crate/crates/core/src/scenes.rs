//! Generators for the benchmark tasks. Each produces a scene file (frames
//! and robots) and a matching domain file.
//!
//! Dimensions are chosen for the reach relations the tasks rely on: crawler
//! links are 0.2 m (reach 1.4 m), climbing stairs have 0.3 m run and rise
//! gaps so one crawler steps exactly one stair and a connected pair two.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::geometry::{Pose, Shape};
use crate::kinematics::{Frame, JointKind, KinematicWorld, KinematicsError, RobotKind};
use crate::symbolic::{Domain, DomainError};

pub const CRAWLER_LINK: f64 = 0.2;
pub const ARM_LINK: f64 = 0.15;
pub const STAIR_SIZE: f64 = 0.6;
pub const STAIR_GAP: f64 = 0.3;
pub const TARGET_RADIUS: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene size must be at least 1")]
    EmptyScene,
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Deserialize)]
#[serde(try_from = "String")]
pub enum TaskId {
    Climb1,
    Climb2,
    ClimbMulti,
    ArmPnp,
    ModularPnp,
    Obstacle,
}

impl TaskId {
    pub const ALL: [TaskId; 6] =
        [TaskId::Climb1, TaskId::Climb2, TaskId::ClimbMulti, TaskId::ArmPnp, TaskId::ModularPnp, TaskId::Obstacle];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Climb1 => "climb-1",
            TaskId::Climb2 => "climb-2",
            TaskId::ClimbMulti => "climb-multi",
            TaskId::ArmPnp => "arm-pnp",
            TaskId::ModularPnp => "modular-pnp",
            TaskId::Obstacle => "obstacle",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for TaskId {
    type Error = SceneError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for TaskId {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| SceneError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SceneSpec {
    pub task: TaskId,
    pub size: usize,
    /// Multi-goal climbing with one crawler only (unsolvable by design).
    pub single_crawler: bool,
}

impl SceneSpec {
    pub fn new(task: TaskId, size: usize) -> Self {
        Self { task, size, single_crawler: false }
    }

    pub fn robot_count(&self) -> usize {
        match self.task {
            TaskId::Climb1 | TaskId::Obstacle => 1,
            TaskId::ClimbMulti if self.single_crawler => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedScene {
    pub scene: String,
    pub domain: String,
}

/// A loaded task: kinematic world plus symbolic domain.
#[derive(Debug, Clone)]
pub struct Task {
    pub spec: SceneSpec,
    pub world: KinematicWorld,
    pub domain: Domain,
}

impl Task {
    pub fn load(spec: SceneSpec) -> Result<Self, SceneError> {
        let g = generate_scene(&spec)?;
        Ok(Self { spec, world: KinematicWorld::parse_scene(&g.scene)?, domain: Domain::parse(&g.domain)? })
    }
}

fn pose(x: f64, y: f64, z: f64) -> Pose {
    Pose::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity())
}

fn fixed(name: &str, center: (f64, f64, f64), shape: Shape) -> Frame {
    Frame {
        name: name.to_string(),
        parent: None,
        relative: pose(center.0, center.1, center.2),
        shape: Some(shape),
        joint: JointKind::Fixed,
    }
}

/// Box given by its x and z extents, 1 m deep in y.
fn slab(name: &str, x: (f64, f64), z: (f64, f64)) -> Frame {
    fixed(
        name,
        ((x.0 + x.1) / 2.0, 0.0, (z.0 + z.1) / 2.0),
        Shape::cuboid(x.1 - x.0, 1.0, z.1 - z.0),
    )
}

fn revolute_z() -> JointKind {
    JointKind::Revolute { axis: Unit::new_unchecked(Vector3::z()) }
}

fn chain(name: &str, base: Frame, link: f64, first_yaw_pi: bool) -> Vec<Frame> {
    let mut frames = vec![base];
    let mut parent = format!("{name}_base");
    for j in 1..=7 {
        let rotation = if j == 1 && first_yaw_pi {
            UnitQuaternion::new_unchecked(Quaternion::new(0.0, 0.0, 0.0, 1.0))
        } else {
            UnitQuaternion::identity()
        };
        let offset = if j == 1 { 0.0 } else { link };
        let fname = format!("{name}_j{j}");
        frames.push(Frame {
            name: fname.clone(),
            parent: Some(parent),
            relative: Pose::from_parts(Translation3::new(offset, 0.0, 0.0), rotation),
            shape: None,
            joint: revolute_z(),
        });
        parent = fname;
    }
    frames.push(Frame {
        name: format!("{name}_tip"),
        parent: Some(parent),
        relative: pose(link, 0.0, 0.0),
        shape: Some(Shape::Sphere { radius: 0.02 }),
        joint: JointKind::Fixed,
    });
    frames
}

/// Crawler moving in the world xz plane with its base at `(x, z)`. With
/// `backward` its chain initially lies along -x.
fn crawler(name: &str, x: f64, z: f64, backward: bool) -> Vec<Frame> {
    let base = Frame {
        name: format!("{name}_base"),
        parent: None,
        relative: Pose::from_parts(
            Translation3::new(x, 0.0, z),
            UnitQuaternion::new_unchecked(Quaternion::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0)),
        ),
        shape: Some(Shape::Sphere { radius: 0.02 }),
        joint: JointKind::Planar,
    };
    chain(name, base, CRAWLER_LINK, backward)
}

/// Fixed-base arm working in the horizontal plane at height `z`.
fn arm(name: &str, x: f64, y: f64, z: f64) -> Vec<Frame> {
    let base = Frame {
        name: format!("{name}_base"),
        parent: None,
        relative: pose(x, y, z),
        shape: Some(Shape::Sphere { radius: 0.05 }),
        joint: JointKind::Fixed,
    };
    chain(name, base, ARM_LINK, false)
}

/// Mobile base driving in the floor plane with a mount point `height` above it.
fn mobile(name: &str, x: f64, height: f64) -> Vec<Frame> {
    vec![
        Frame {
            name: format!("{name}_base"),
            parent: None,
            relative: pose(x, 0.0, 0.0),
            shape: Some(Shape::cuboid(0.3, 0.3, 0.1)),
            joint: JointKind::Planar,
        },
        Frame {
            name: format!("{name}_top"),
            parent: Some(format!("{name}_base")),
            relative: pose(0.0, 0.0, height),
            shape: None,
            joint: JointKind::Fixed,
        },
    ]
}

const CRAWLER_TYPES: &str = "\
type support
type robot
type crawler robot
type target
predicate on 2
predicate standing 1
predicate single 1
predicate free 1
predicate connected 2
predicate holding 2
predicate grasped 1
";

const CRAWLER_ACTIONS: &str = "\
action step (?r:crawler ?from:support ?to:support) pre: !(= ?from ?to) (standing ?r) (single ?r) (free ?r) (on ?r ?from) add: (on ?r ?to) del: (on ?r ?from) tag: step
action connect (?a:crawler ?b:crawler ?sa:support ?sb:support) pre: !(= ?a ?b) (standing ?a) (standing ?b) (on ?a ?sa) (on ?b ?sb) (free ?a) (free ?b) (single ?a) (single ?b) add: (connected ?a ?b) del: (on ?b ?sb) (standing ?b) (single ?a) (single ?b) tag: connect
action stepTogether (?a:crawler ?b:crawler ?from:support ?to:support) pre: !(= ?from ?to) (connected ?a ?b) (on ?a ?from) (free ?a) (free ?b) add: (connected ?b ?a) (on ?b ?to) (standing ?b) del: (connected ?a ?b) (on ?a ?from) (standing ?a) tag: stepTogether
action disconnect (?a:crawler ?b:crawler ?sa:support ?sb:support) pre: (connected ?a ?b) (on ?a ?sa) (free ?a) (free ?b) add: (on ?b ?sb) (standing ?b) (single ?a) (single ?b) del: (connected ?a ?b) tag: disconnect
action touch (?r:crawler ?o:target) pre: (standing ?r) (free ?r) add: (holding ?r ?o) (grasped ?o) del: (free ?r) tag: pick
";

fn crawler_init(out: &mut String, name: &str, support: &str) {
    let _ = writeln!(out, "init: (on {name} {support}) (standing {name}) (single {name}) (free {name})");
}

fn finish(frames: Vec<Frame>, robots: Vec<(RobotKind, String, String)>, domain: String) -> Result<GeneratedScene, SceneError> {
    let world = KinematicWorld::new(frames, robots)?;
    Ok(GeneratedScene { scene: world.to_scene_text(), domain })
}

/// Top height and x extent of stair `i` (1-based) of the climbing scenes.
pub fn stair_extent(i: usize) -> ((f64, f64), f64) {
    let x0 = STAIR_GAP + (i - 1) as f64 * (STAIR_SIZE + STAIR_GAP);
    let top = i as f64 * (STAIR_SIZE + STAIR_GAP);
    ((x0, x0 + STAIR_SIZE), top)
}

fn climb(n: usize, two: bool) -> Result<GeneratedScene, SceneError> {
    let mut frames = vec![slab("floor", (-4.0, 0.0), (-0.2, 0.0))];
    for i in 1..=n {
        let (x, top) = stair_extent(i);
        frames.push(slab(&format!("stair{i}"), x, (top - STAIR_SIZE, top)));
    }
    let (x, top) = stair_extent(n);
    frames.push(fixed("target", (x.1 - TARGET_RADIUS, 0.0, top + 0.6), Shape::Sphere { radius: TARGET_RADIUS }));
    frames.extend(crawler("c1", -0.1, 0.0, true));
    let mut robots = vec![(RobotKind::Crawler, "c1_base".to_string(), "c1".to_string())];
    if two {
        frames.extend(crawler("c2", -1.7, 0.0, true));
        robots.push((RobotKind::Crawler, "c2_base".to_string(), "c2".to_string()));
    }
    let mut d = String::from(CRAWLER_TYPES);
    d.push_str(CRAWLER_ACTIONS);
    d.push_str("object floor support\n");
    for i in 1..=n {
        let _ = writeln!(d, "object stair{i} support");
    }
    d.push_str("object target target\nobject c1 crawler\n");
    if two {
        d.push_str("object c2 crawler\n");
    }
    crawler_init(&mut d, "c1", "floor");
    if two {
        crawler_init(&mut d, "c2", "floor");
    }
    d.push_str("goal: (grasped target)\n");
    finish(frames, robots, d)
}

/// Wide-stair extents for the multi-goal scene: one crawler cannot bridge a
/// 1.6 m run, a connected pair can.
pub fn wide_stair_extent(i: usize) -> ((f64, f64), f64) {
    let x0 = 1.6 + (i - 1) as f64 * 2.2;
    ((x0, x0 + STAIR_SIZE), i as f64 * STAIR_SIZE)
}

fn climb_multi(n: usize, single: bool) -> Result<GeneratedScene, SceneError> {
    let mut frames = vec![
        slab("tileF", (-5.0, -4.0), (-0.2, 0.0)),
        slab("tileM", (-3.4, -1.8), (-0.2, 0.0)),
        slab("tileN", (-1.0, 0.0), (-0.2, 0.0)),
    ];
    for i in 1..=n {
        let (x, top) = wide_stair_extent(i);
        frames.push(slab(&format!("stair{i}"), x, (top - STAIR_SIZE, top)));
    }
    let (x, top) = wide_stair_extent(n);
    let r = Shape::Sphere { radius: TARGET_RADIUS };
    frames.push(fixed("target1", (x.0 + TARGET_RADIUS, 0.0, top + 0.6), r));
    frames.push(fixed("target2", (x.1 - TARGET_RADIUS, 0.0, top + 0.6), r));
    frames.extend(crawler("c1", -0.1, 0.0, true));
    let mut robots = vec![(RobotKind::Crawler, "c1_base".to_string(), "c1".to_string())];
    if !single {
        frames.extend(crawler("c2", -4.2, 0.0, false));
        robots.push((RobotKind::Crawler, "c2_base".to_string(), "c2".to_string()));
    }
    let mut d = String::from(CRAWLER_TYPES);
    d.push_str(CRAWLER_ACTIONS);
    d.push_str("object tileF support\nobject tileM support\nobject tileN support\n");
    for i in 1..=n {
        let _ = writeln!(d, "object stair{i} support");
    }
    d.push_str("object target1 target\nobject target2 target\nobject c1 crawler\n");
    if !single {
        d.push_str("object c2 crawler\n");
    }
    crawler_init(&mut d, "c1", "tileN");
    if !single {
        crawler_init(&mut d, "c2", "tileF");
    }
    d.push_str("goal: (grasped target1) (grasped target2)\n");
    finish(frames, robots, d)
}

const TABLE_TOP: f64 = 0.4;
const CUBE: f64 = 0.06;

fn cube_offset(i: usize) -> (f64, f64, f64) {
    let slot = i % 9;
    let layer = (i / 9) as f64;
    (-0.1 + 0.1 * (slot % 3) as f64, -0.1 + 0.1 * (slot / 3) as f64, layer * CUBE)
}

fn table(name: &str, x: f64, y: f64) -> Frame {
    fixed(name, (x, y, TABLE_TOP / 2.0), Shape::cuboid(0.3, 0.3, TABLE_TOP))
}

const PNP_TYPES: &str = "\
type surface
type robot
type object
predicate at 2
predicate free 1
predicate holding 2
predicate grasped 1
";

fn arm_pnp(n: usize) -> Result<GeneratedScene, SceneError> {
    let z = TABLE_TOP + CUBE / 2.0;
    let mut frames = vec![table("table0", 0.0, 0.0), table("table1", 1.8, 0.0), table("tray", 3.6, 0.0)];
    for i in 0..n {
        let (dx, dy, dz) = cube_offset(i);
        frames.push(fixed(&format!("obj{}", i + 1), (dx, dy, z + dz), Shape::cuboid(CUBE, CUBE, CUBE)));
    }
    frames.extend(arm("a1", 0.9, 0.0, z));
    frames.extend(arm("a2", 2.7, 0.0, z));
    let robots = vec![
        (RobotKind::Arm, "a1_base".to_string(), "a1".to_string()),
        (RobotKind::Arm, "a2_base".to_string(), "a2".to_string()),
    ];
    let mut d = String::from(PNP_TYPES);
    d.push_str("type arm robot\n");
    d.push_str("action pick (?r:arm ?o:object ?t:surface) pre: (free ?r) (at ?o ?t) add: (holding ?r ?o) (grasped ?o) del: (free ?r) (at ?o ?t) tag: pick\n");
    d.push_str("action place (?r:arm ?o:object ?s:surface) pre: (holding ?r ?o) add: (at ?o ?s) (free ?r) del: (holding ?r ?o) (grasped ?o) tag: place\n");
    d.push_str("object table0 surface\nobject table1 surface\nobject tray surface\nobject a1 arm\nobject a2 arm\n");
    for i in 1..=n {
        let _ = writeln!(d, "object obj{i} object");
    }
    d.push_str("init: (free a1) (free a2)\n");
    for i in 1..=n {
        let _ = writeln!(d, "init: (at obj{i} table0)");
    }
    d.push_str("goal:");
    for i in 1..=n {
        let _ = write!(d, " (at obj{i} tray)");
    }
    d.push('\n');
    finish(frames, robots, d)
}

fn modular_pnp(n: usize) -> Result<GeneratedScene, SceneError> {
    let z = TABLE_TOP + CUBE / 2.0;
    let mut frames = vec![
        slab("floor", (-4.0, 4.0 + 2.0 * n as f64), (-0.2, 0.0)),
        fixed("pedestal", (0.0, 0.0, 0.25), Shape::cuboid(0.4, 0.4, 0.5)),
        table("tray", -2.5, 0.0),
    ];
    for i in 0..n {
        let x = 1.9 + 2.0 * i as f64;
        frames.push(table(&format!("table{}", i + 1), x, 0.0));
        frames.push(fixed(&format!("cup{}", i + 1), (x, 0.0, z), Shape::cuboid(CUBE, CUBE, CUBE)));
    }
    frames.extend(crawler("c", 0.0, 0.5, true));
    frames.extend(mobile("m", -1.2, 0.5));
    let robots = vec![
        (RobotKind::Crawler, "c_base".to_string(), "c".to_string()),
        (RobotKind::MobileBase, "m_base".to_string(), "m".to_string()),
    ];
    let mut d = String::from(PNP_TYPES);
    d.push_str("type support surface\ntype ground\ntype crawler robot\ntype mobile robot\n");
    d.push_str("predicate on 2\npredicate standing 1\npredicate single 1\npredicate connected 2\n");
    d.push_str("action step (?r:crawler ?from:support ?to:support) pre: !(= ?from ?to) (standing ?r) (single ?r) (free ?r) (on ?r ?from) add: (on ?r ?to) del: (on ?r ?from) tag: step\n");
    d.push_str("action pick (?r:crawler ?o:object ?t:surface) pre: (standing ?r) (free ?r) (at ?o ?t) add: (holding ?r ?o) (grasped ?o) del: (free ?r) (at ?o ?t) tag: pick\n");
    d.push_str("action place (?r:crawler ?o:object ?s:surface) pre: (standing ?r) (holding ?r ?o) add: (at ?o ?s) (free ?r) del: (holding ?r ?o) (grasped ?o) tag: place\n");
    d.push_str("action mount (?m:mobile ?c:crawler ?sm:ground ?sc:support) pre: (on ?m ?sm) (on ?c ?sc) (standing ?c) (single ?c) (free ?c) add: (connected ?m ?c) del: (on ?c ?sc) (standing ?c) (single ?c) tag: connect\n");
    d.push_str("action pickM (?c:crawler ?o:object ?t:surface ?m:mobile) pre: (connected ?m ?c) (free ?c) (at ?o ?t) add: (holding ?c ?o) (grasped ?o) del: (free ?c) (at ?o ?t) tag: pick\n");
    d.push_str("action placeM (?c:crawler ?o:object ?s:surface ?m:mobile) pre: (connected ?m ?c) (holding ?c ?o) add: (at ?o ?s) (free ?c) del: (holding ?c ?o) (grasped ?o) tag: place\n");
    d.push_str("object floor ground\nobject pedestal support\nobject tray surface\nobject c crawler\nobject m mobile\n");
    for i in 1..=n {
        let _ = writeln!(d, "object table{i} support\nobject cup{i} object");
    }
    d.push_str("init: (on m floor) (on c pedestal) (standing c) (single c) (free c)\n");
    for i in 1..=n {
        let _ = writeln!(d, "init: (at cup{i} table{i})");
    }
    d.push_str("goal:");
    for i in 1..=n {
        let _ = write!(d, " (at cup{i} tray)");
    }
    d.push('\n');
    finish(frames, robots, d)
}

/// Ground tiles separated alternately by a gap under a hanging barrier and by
/// a wide block that must be climbed.
fn obstacle(n: usize) -> Result<GeneratedScene, SceneError> {
    const TILE: f64 = 1.4;
    let mut frames = vec![slab("tile0", (-TILE, 0.0), (-0.2, 0.0))];
    let mut supports = vec!["tile0".to_string()];
    let mut x = 0.0;
    for i in 1..=n {
        if i % 2 == 1 {
            frames.push(slab(&format!("barrier{i}"), (x, x + 0.6), (0.45, 1.45)));
            x += 0.6;
        } else {
            frames.push(slab(&format!("block{i}"), (x, x + 1.6), (-0.2, 0.4)));
            supports.push(format!("block{i}"));
            x += 1.6;
        }
        frames.push(slab(&format!("tile{i}"), (x, x + TILE), (-0.2, 0.0)));
        supports.push(format!("tile{i}"));
        x += TILE;
    }
    frames.push(fixed("target", (x - TARGET_RADIUS, 0.0, 1.2), Shape::Sphere { radius: TARGET_RADIUS }));
    frames.extend(crawler("c1", -0.1, 0.0, true));
    let robots = vec![(RobotKind::Crawler, "c1_base".to_string(), "c1".to_string())];
    let mut d = String::from(CRAWLER_TYPES);
    d.push_str(CRAWLER_ACTIONS);
    for s in &supports {
        let _ = writeln!(d, "object {s} support");
    }
    d.push_str("object target target\nobject c1 crawler\n");
    crawler_init(&mut d, "c1", "tile0");
    d.push_str("goal: (grasped target)\n");
    finish(frames, robots, d)
}

/// Deterministic scene and domain text for `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene, SceneError> {
    let n = spec.size;
    if n == 0 {
        return Err(SceneError::EmptyScene);
    }
    match spec.task {
        TaskId::Climb1 => climb(n, false),
        TaskId::Climb2 => climb(n, true),
        TaskId::ClimbMulti => climb_multi(n, spec.single_crawler),
        TaskId::ArmPnp => arm_pnp(n),
        TaskId::ModularPnp => modular_pnp(n),
        TaskId::Obstacle => obstacle(n),
    }
}
