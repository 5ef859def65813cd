//! Cost-to-go values for search nodes, computed from the symbolic trace and
//! fixed geometry of the episode's initial configuration. Nothing here
//! touches the motion solver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::geometry::{shape_distance, Pose, Shape};
use crate::kinematics::{KinematicWorld, RobotKind};
use crate::symbolic::{Domain, GeometricTag, GroundAction, Sym, SymbolicState};

/// Base cost of one action.
pub const ACTION_COST: f64 = 1.0;
/// Cost of placing into the goal region.
pub const GOAL_PLACE_COST: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PruneReason {
    /// Geometrically out of reach.
    Reach,
    /// Undoes the previous action.
    Oscillation,
    /// The keyframe NLP of the prefix has no solution.
    SequenceInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostToGo {
    pub value: f64,
    pub reason: Option<PruneReason>,
}

impl CostToGo {
    pub fn finite(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        Self { value, reason: None }
    }

    pub fn pruned(reason: PruneReason) -> Self {
        Self { value: f64::INFINITY, reason: Some(reason) }
    }

    pub fn is_pruned(&self) -> bool {
        self.value == f64::INFINITY
    }
}

/// Which cost-to-go supplier orders the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Deserialize)]
#[serde(try_from = "String")]
pub enum HeuristicMode {
    /// Geometry-based action heuristics with pruning.
    ActionSpecific,
    /// Depth only: breadth-first order, nothing pruned.
    None,
    /// Keyframe NLP of the prefix decides (+inf when infeasible).
    SequenceBound,
}

impl HeuristicMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicMode::ActionSpecific => "action",
            HeuristicMode::None => "none",
            HeuristicMode::SequenceBound => "seq",
        }
    }
}

impl fmt::Display for HeuristicMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for HeuristicMode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for HeuristicMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "action" | "action-specific" => Ok(Self::ActionSpecific),
            "none" => Ok(Self::None),
            "seq" | "sequence" | "sequence-bound" => Ok(Self::SequenceBound),
            other => Err(format!("unknown heuristic mode `{other}` (expected action, none or seq)")),
        }
    }
}

/// The path from the episode root to a node.
#[derive(Debug, Clone, Copy)]
pub struct HeuristicContext<'a> {
    /// States from the root (index 0) to the node.
    pub states: &'a [&'a SymbolicState],
    /// Actions along the path; `actions.len() + 1 == states.len()`.
    pub actions: &'a [&'a GroundAction],
}

impl HeuristicContext<'_> {
    pub fn depth(&self) -> usize {
        self.actions.len()
    }
}

/// Depth-only supplier.
pub fn depth_cost(ctx: &HeuristicContext) -> CostToGo {
    CostToGo::finite(ctx.depth() as f64 * ACTION_COST)
}

struct Preds {
    on: Option<Sym>,
    at: Option<Sym>,
    connected: Option<Sym>,
}

/// Action-specific heuristics over the initial configuration of an episode.
pub struct ActionHeuristics<'a> {
    domain: &'a Domain,
    root: SymbolicState,
    shapes: BTreeMap<String, (Shape, Pose)>,
    robots: BTreeMap<String, (RobotKind, f64, String)>,
    preds: Preds,
    goal_surfaces: BTreeSet<Sym>,
}

impl<'a> ActionHeuristics<'a> {
    pub fn new(world: &KinematicWorld, domain: &'a Domain, root: &SymbolicState) -> Self {
        let poses = world.forward_kinematics(&world.configuration).expect("world configuration is consistent");
        let shapes = world
            .frames()
            .iter()
            .filter_map(|f| f.shape.map(|s| (f.name.clone(), (s, poses[&f.name]))))
            .collect();
        let robots = world.robots().iter().map(|r| (r.name.clone(), (r.kind, r.reach, r.base.clone()))).collect();
        let preds = Preds { on: domain.sym("on"), at: domain.sym("at"), connected: domain.sym("connected") };
        let goal_surfaces = domain
            .goal
            .required
            .iter()
            .filter(|f| Some(f.pred) == preds.at && f.arity == 2)
            .map(|f| f.args[1])
            .collect();
        Self { domain, root: root.clone(), shapes, robots, preds, goal_surfaces }
    }

    /// Distance between two shaped frames; 0 when either lacks a shape, so
    /// unknown geometry never prunes.
    pub fn support_distance(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        match (self.shapes.get(a), self.shapes.get(b)) {
            (Some((sa, pa)), Some((sb, pb))) => shape_distance(sa, pa, sb, pb),
            _ => 0.0,
        }
    }

    fn name(&self, s: Sym) -> &str {
        self.domain.name(s)
    }

    /// Robots connected to `robot` in `state`.
    fn assembly(&self, state: &SymbolicState, robot: Sym) -> Vec<Sym> {
        let mut members = vec![robot];
        let Some(conn) = self.preds.connected else { return members };
        loop {
            let before = members.len();
            for f in state.facts().iter().filter(|f| f.pred == conn) {
                let (a, b) = (f.args[0], f.args[1]);
                if members.contains(&a) && !members.contains(&b) {
                    members.push(b);
                } else if members.contains(&b) && !members.contains(&a) {
                    members.push(a);
                }
            }
            if members.len() == before {
                return members;
            }
        }
    }

    /// Combined reach; unbounded when a mobile base carries the assembly.
    fn reach(&self, members: &[Sym]) -> f64 {
        let mut r = 0.0;
        for m in members {
            match self.robots.get(self.name(*m)) {
                Some((RobotKind::MobileBase, _, _)) => return f64::INFINITY,
                Some((_, reach, _)) => r += reach,
                None => {}
            }
        }
        r
    }

    /// Frame the assembly is grounded on.
    fn support_of(&self, state: &SymbolicState, members: &[Sym]) -> Option<String> {
        if let Some(on) = self.preds.on {
            for m in members {
                if let Some(f) = state.matching(on, *m).next() {
                    return Some(self.name(f.args[1]).to_string());
                }
            }
        }
        members.iter().find_map(|m| self.robots.get(self.name(*m)).map(|r| r.2.clone()))
    }

    fn surface_of(&self, state: &SymbolicState, object: Sym) -> Option<Sym> {
        let at = self.preds.at?;
        state.matching(at, object).next().map(|f| f.args[1])
    }

    /// First goal fact not yet satisfied; its first argument is the target.
    fn navigation_goal(&self, state: &SymbolicState) -> Option<String> {
        self.domain
            .goal
            .required
            .iter()
            .find(|f| !state.contains(f))
            .map(|f| self.name(f.args[0]).to_string())
            .filter(|n| self.shapes.contains_key(n))
    }

    fn reach_check(&self, from: &str, to: &str, reach: f64) -> Option<CostToGo> {
        (self.support_distance(from, to) > reach).then(|| CostToGo::pruned(PruneReason::Reach))
    }

    fn pick(&self, a: &GroundAction, before: &SymbolicState) -> CostToGo {
        let (Some(robot), Some(object)) = (a.arg(0), a.arg(1)) else { return CostToGo::finite(ACTION_COST) };
        let members = self.assembly(before, robot);
        let reach = self.reach(&members);
        let Some(base) = self.support_of(before, &members) else { return CostToGo::finite(ACTION_COST) };
        let current = self.surface_of(before, object);
        let target = match current {
            Some(s) if Some(s) != self.surface_of(&self.root, object) => self.name(s).to_string(),
            _ => self.name(object).to_string(),
        };
        self.reach_check(&base, &target, reach).unwrap_or(CostToGo::finite(ACTION_COST))
    }

    fn place(&self, a: &GroundAction, before: &SymbolicState) -> CostToGo {
        let (Some(robot), Some(surface)) = (a.arg(0), a.arg(2)) else { return CostToGo::finite(ACTION_COST) };
        let members = self.assembly(before, robot);
        let reach = self.reach(&members);
        if let Some(base) = self.support_of(before, &members) {
            if let Some(p) = self.reach_check(&base, self.name(surface), reach) {
                return p;
            }
        }
        if self.goal_surfaces.contains(&surface) {
            CostToGo::finite(GOAL_PLACE_COST)
        } else {
            CostToGo::finite(ACTION_COST)
        }
    }

    fn step(&self, a: &GroundAction, before: &SymbolicState, from_arg: usize) -> CostToGo {
        let (Some(robot), Some(from), Some(to)) = (a.arg(0), a.arg(from_arg), a.arg(from_arg + 1)) else {
            return CostToGo::finite(ACTION_COST);
        };
        let reach = self.reach(&self.assembly(before, robot));
        let (from, to) = (self.name(from), self.name(to));
        if let Some(p) = self.reach_check(from, to, reach) {
            return p;
        }
        match self.navigation_goal(before) {
            Some(goal) if reach.is_finite() && reach > 0.0 => {
                CostToGo::finite(ACTION_COST + self.support_distance(to, &goal) / reach)
            }
            _ => CostToGo::finite(ACTION_COST),
        }
    }

    fn same_pair(a: &GroundAction, b: &GroundAction) -> bool {
        let p = (a.arg(0), a.arg(1));
        let q = (b.arg(0), b.arg(1));
        p == q || p == (q.1, q.0)
    }

    fn connect(&self, a: &GroundAction, prev: Option<&GroundAction>) -> CostToGo {
        if prev.is_some_and(|p| p.tag() == GeometricTag::Disconnect && Self::same_pair(a, p)) {
            return CostToGo::pruned(PruneReason::Oscillation);
        }
        if let (Some(ra), Some(rb), Some(sa), Some(sb)) = (a.arg(0), a.arg(1), a.arg(2), a.arg(3)) {
            let reach = self.reach(&[ra]) + self.reach(&[rb]);
            if let Some(p) = self.reach_check(self.name(sa), self.name(sb), reach) {
                return p;
            }
        }
        CostToGo::finite(ACTION_COST)
    }

    fn disconnect(a: &GroundAction, prev: Option<&GroundAction>) -> CostToGo {
        if prev.is_some_and(|p| p.tag() == GeometricTag::Connect && Self::same_pair(a, p)) {
            return CostToGo::pruned(PruneReason::Oscillation);
        }
        CostToGo::finite(ACTION_COST)
    }

    /// Dispatches on the tag of the node's incoming action; the root costs 0.
    pub fn cost_to_go(&self, ctx: &HeuristicContext) -> CostToGo {
        let Some(&action) = ctx.actions.last() else { return CostToGo::finite(0.0) };
        let depth = ctx.depth();
        let before = ctx.states[depth - 1];
        let prev = depth.checked_sub(2).map(|i| ctx.actions[i]);
        match action.tag() {
            GeometricTag::Pick => self.pick(action, before),
            GeometricTag::Place => self.place(action, before),
            GeometricTag::Step => self.step(action, before, 1),
            GeometricTag::StepTogether => self.step(action, before, 2),
            GeometricTag::Connect => self.connect(action, prev),
            GeometricTag::Disconnect => Self::disconnect(action, prev),
            GeometricTag::None => depth_cost(ctx),
        }
    }
}
