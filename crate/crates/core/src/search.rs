//! Multi-bound tree search: symbolic best-first expansion feeding a keyframe
//! NLP queue, which feeds a full-path NLP queue.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::heuristics::{depth_cost, ActionHeuristics, CostToGo, HeuristicContext, HeuristicMode, PruneReason};
use crate::kinematics::KinematicWorld;
use crate::motion::{
    build_path_nlp, build_sequence_nlp, solve, BuildOptions, MotionError, SolveResult, Skeleton, Trajectory,
};
use crate::symbolic::{apply, is_applicable, is_goal, Domain, GroundAction, SymbolicState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Unexplored,
    SeqFeasible,
    SeqInfeasible,
    PathFeasible,
    PathInfeasible,
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub state: SymbolicState,
    /// Index into the ground action list.
    pub action: Option<usize>,
    pub depth: usize,
    pub cost: CostToGo,
    pub status: BoundStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueKey {
    priority: f64,
    seq: u64,
    node: usize,
}

impl Eq for QueueKey {}

impl Ord for QueueKey {
    // reversed so that BinaryHeap pops the smallest priority, then the oldest entry
    fn cmp(&self, other: &Self) -> Ordering {
        other.priority.total_cmp(&self.priority).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-priority queue with first-in-first-out ties.
#[derive(Debug, Default, Clone)]
pub struct FifoQueue {
    heap: BinaryHeap<QueueKey>,
    counter: u64,
}

impl FifoQueue {
    pub fn push(&mut self, node: usize, priority: f64) {
        self.heap.push(QueueKey { priority, seq: self.counter, node });
        self.counter += 1;
    }

    pub fn pop(&mut self) -> Option<usize> {
        self.heap.pop().map(|k| k.node)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Default, Clone)]
pub struct SearchQueues {
    pub symbolic: FifoQueue,
    pub sequence: FifoQueue,
    pub path: FifoQueue,
}

impl SearchQueues {
    pub fn is_empty(&self) -> bool {
        self.symbolic.is_empty() && self.sequence.is_empty() && self.path.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SearchMetrics {
    pub time_s: f64,
    pub tree_nodes: usize,
    pub expanded: usize,
    pub seq_solves: usize,
    pub path_solves: usize,
    pub sol_len: Option<usize>,
}

impl SearchMetrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }

    pub fn accumulate(&mut self, other: &SearchMetrics) {
        self.time_s += other.time_s;
        self.tree_nodes += other.tree_nodes;
        self.expanded += other.expanded;
        self.seq_solves += other.seq_solves;
        self.path_solves += other.path_solves;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub horizon: usize,
    pub node_budget: usize,
    pub time_budget: Duration,
    pub seed: u64,
    pub mode: HeuristicMode,
    pub depth_limit: usize,
    pub build: BuildOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            horizon: usize::MAX,
            node_budget: 50_000,
            time_budget: Duration::from_secs(120),
            seed: 0,
            mode: HeuristicMode::ActionSpecific,
            depth_limit: 16,
            build: BuildOptions::default(),
        }
    }
}

/// A child discarded with infinite cost-to-go.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedChild {
    pub parent: usize,
    pub action: usize,
    pub reason: PruneReason,
}

#[derive(Debug, Clone)]
pub struct Found {
    pub node: usize,
    /// Actions from the root to the goal node.
    pub plan: Vec<GroundAction>,
    /// The verified prefix `plan[0..h]`.
    pub skeleton: Skeleton,
    pub sequence: SolveResult,
    pub path: SolveResult,
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Found(Box<Found>),
    Continue,
    Exhausted,
}

#[derive(Debug, Clone)]
pub enum SearchStatus {
    Found(Box<Found>),
    Exhausted,
    Timeout,
}

/// Verdicts recorded for one skeleton; `None` when that bound was never solved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundRecord {
    pub skeleton: String,
    pub sequence: Option<bool>,
    pub path: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct SearchRun {
    pub status: SearchStatus,
    pub metrics: SearchMetrics,
    /// Every skeleton solved at either bound level, sorted by key.
    pub bounds: Vec<BoundRecord>,
}

/// One planning episode's search tree and queues.
pub struct Search<'a> {
    world: &'a KinematicWorld,
    domain: &'a Domain,
    actions: &'a [GroundAction],
    prefix: Option<&'a Trajectory>,
    config: SearchConfig,
    heuristics: ActionHeuristics<'a>,
    pub nodes: Vec<SearchNode>,
    pub queues: SearchQueues,
    pub metrics: SearchMetrics,
    pub pruned: Vec<PrunedChild>,
    seq_cache: HashMap<String, Result<SolveResult, MotionError>>,
    path_cache: HashMap<String, Result<SolveResult, MotionError>>,
}

impl<'a> Search<'a> {
    /// Search rooted at `root` with `world` as the episode's initial configuration.
    pub fn new(
        world: &'a KinematicWorld,
        domain: &'a Domain,
        actions: &'a [GroundAction],
        root: SymbolicState,
        prefix: Option<&'a Trajectory>,
        config: SearchConfig,
    ) -> Self {
        let heuristics = ActionHeuristics::new(world, domain, &root);
        let mut s = Self {
            world,
            domain,
            actions,
            prefix,
            config,
            heuristics,
            nodes: Vec::new(),
            queues: SearchQueues::default(),
            metrics: SearchMetrics::default(),
            pruned: Vec::new(),
            seq_cache: HashMap::new(),
            path_cache: HashMap::new(),
        };
        s.nodes.push(SearchNode {
            id: 0,
            parent: None,
            state: root,
            action: None,
            depth: 0,
            cost: CostToGo::finite(0.0),
            status: BoundStatus::Unexplored,
        });
        s.queues.symbolic.push(0, 0.0);
        s
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// Ground-action indices from the root to `node`.
    pub fn action_indices(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[node].depth);
        let mut n = node;
        while let Some(p) = self.nodes[n].parent {
            out.push(self.nodes[n].action.expect("non-root node has an action"));
            n = p;
        }
        out.reverse();
        out
    }

    pub fn plan_of(&self, node: usize) -> Vec<GroundAction> {
        self.action_indices(node).into_iter().map(|i| self.actions[i].clone()).collect()
    }

    fn ancestors(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut n = node;
        while let Some(p) = self.nodes[n].parent {
            out.push(p);
            n = p;
        }
        out.reverse();
        out
    }

    fn skeleton(&self, actions: Vec<GroundAction>) -> Result<Skeleton, MotionError> {
        Skeleton::new(self.nodes[0].state.clone(), actions)
    }

    fn solve_sequence(&mut self, actions: Vec<GroundAction>) -> Result<SolveResult, MotionError> {
        let sk = self.skeleton(actions)?;
        let key = sk.key();
        if let Some(r) = self.seq_cache.get(&key) {
            return r.clone();
        }
        self.metrics.seq_solves += 1;
        let r = build_sequence_nlp(&sk, self.world, &self.domain.symbols).map(|spec| solve(&spec, self.config.seed));
        self.seq_cache.insert(key, r.clone());
        r
    }

    fn solve_path(&mut self, sk: &Skeleton, seq: &SolveResult) -> Result<SolveResult, MotionError> {
        let key = sk.key();
        if let Some(r) = self.path_cache.get(&key) {
            return r.clone();
        }
        self.metrics.path_solves += 1;
        let r = build_path_nlp(sk, self.world, &self.domain.symbols, self.prefix, &self.config.build).map(|mut spec| {
            spec.seed_from_keyframes(&seq.trajectory);
            solve(&spec, self.config.seed)
        });
        self.path_cache.insert(key, r.clone());
        r
    }

    fn evaluate(&mut self, chain: &[usize], child_state: &SymbolicState, action: usize) -> CostToGo {
        let states: Vec<&SymbolicState> =
            chain.iter().map(|&n| &self.nodes[n].state).chain(std::iter::once(child_state)).collect();
        let acts: Vec<&GroundAction> = chain[1..]
            .iter()
            .map(|&n| &self.actions[self.nodes[n].action.expect("non-root")])
            .chain(std::iter::once(&self.actions[action]))
            .collect();
        let ctx = HeuristicContext { states: &states, actions: &acts };
        match self.config.mode {
            HeuristicMode::ActionSpecific => self.heuristics.cost_to_go(&ctx),
            HeuristicMode::None => depth_cost(&ctx),
            HeuristicMode::SequenceBound => {
                let plan: Vec<GroundAction> = acts.iter().map(|a| (*a).clone()).collect();
                match self.solve_sequence(plan) {
                    Ok(r) if r.feasible => CostToGo::finite(r.trajectory.cost),
                    _ => CostToGo::pruned(PruneReason::SequenceInfeasible),
                }
            }
        }
    }

    /// Creates the children of `node`; returns the ids of those enqueued.
    pub fn expand(&mut self, node: usize) -> Vec<usize> {
        self.metrics.expanded += 1;
        let depth = self.nodes[node].depth;
        if depth >= self.config.depth_limit || self.nodes[node].cost.is_pruned() {
            return Vec::new();
        }
        let chain = self.ancestors(node);
        let mut enqueued = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            if !is_applicable(&self.nodes[node].state, a) {
                continue;
            }
            let state = apply(&self.nodes[node].state, a).expect("applicable");
            if chain.iter().any(|&n| self.nodes[n].state == state) {
                continue;
            }
            let cost = self.evaluate(&chain, &state, i);
            self.metrics.tree_nodes += 1;
            if let Some(reason) = cost.reason {
                self.pruned.push(PrunedChild { parent: node, action: i, reason });
                continue;
            }
            let id = self.nodes.len();
            self.nodes.push(SearchNode {
                id,
                parent: Some(node),
                state,
                action: Some(i),
                depth: depth + 1,
                cost,
                status: BoundStatus::Unexplored,
            });
            self.queues.symbolic.push(id, cost.value);
            enqueued.push(id);
        }
        enqueued
    }

    /// One iteration: a symbolic pop, a keyframe-NLP pop, a path-NLP pop.
    pub fn search_step(&mut self) -> StepOutcome {
        if self.queues.is_empty() {
            return StepOutcome::Exhausted;
        }
        if let Some(n) = self.queues.symbolic.pop() {
            if is_goal(&self.nodes[n].state, &self.domain.goal) {
                self.queues.sequence.push(n, self.nodes[n].cost.value);
            } else {
                self.expand(n);
            }
        }
        if let Some(n) = self.queues.sequence.pop() {
            let mut plan = self.plan_of(n);
            plan.truncate(self.config.horizon.max(1));
            match self.solve_sequence(plan) {
                Ok(r) if r.feasible => {
                    self.nodes[n].status = BoundStatus::SeqFeasible;
                    self.queues.path.push(n, r.trajectory.cost);
                }
                _ => self.nodes[n].status = BoundStatus::SeqInfeasible,
            }
        }
        if let Some(n) = self.queues.path.pop() {
            let full = self.plan_of(n);
            let mut plan = full.clone();
            plan.truncate(self.config.horizon.max(1));
            let seq = self.solve_sequence(plan.clone());
            let sk = self.skeleton(plan);
            if let (Ok(seq), Ok(sk)) = (seq, sk) {
                match self.solve_path(&sk, &seq) {
                    Ok(path) if path.feasible => {
                        self.nodes[n].status = BoundStatus::PathFeasible;
                        return StepOutcome::Found(Box::new(Found { node: n, plan: full, skeleton: sk, sequence: seq, path }));
                    }
                    _ => self.nodes[n].status = BoundStatus::PathInfeasible,
                }
            } else {
                self.nodes[n].status = BoundStatus::PathInfeasible;
            }
        }
        StepOutcome::Continue
    }

    pub fn bound_log(&self) -> Vec<BoundRecord> {
        let verdict = |r: &Result<SolveResult, MotionError>| r.as_ref().is_ok_and(|r| r.feasible);
        let keys: std::collections::BTreeSet<&String> = self.seq_cache.keys().chain(self.path_cache.keys()).collect();
        keys.into_iter()
            .map(|k| BoundRecord {
                skeleton: k.clone(),
                sequence: self.seq_cache.get(k).map(verdict),
                path: self.path_cache.get(k).map(verdict),
            })
            .collect()
    }

    /// Iterates until a verified plan prefix is found, the queues run dry or a budget is hit.
    pub fn run(mut self) -> (SearchRun, Self) {
        let start = Instant::now();
        let status = loop {
            if self.metrics.tree_nodes >= self.config.node_budget || start.elapsed() >= self.config.time_budget {
                break SearchStatus::Timeout;
            }
            match self.search_step() {
                StepOutcome::Found(f) => break SearchStatus::Found(f),
                StepOutcome::Exhausted => break SearchStatus::Exhausted,
                StepOutcome::Continue => {}
            }
        };
        self.metrics.time_s = start.elapsed().as_secs_f64();
        if let SearchStatus::Found(f) = &status {
            self.metrics.sol_len = Some(f.plan.len());
        }
        let bounds = self.bound_log();
        (SearchRun { status, metrics: self.metrics, bounds }, self)
    }
}

/// Runs one episode's inner loop from `root`.
pub fn run_inner_loop(
    world: &KinematicWorld,
    domain: &Domain,
    actions: &[GroundAction],
    root: SymbolicState,
    prefix: Option<&Trajectory>,
    config: SearchConfig,
) -> SearchRun {
    Search::new(world, domain, actions, root, prefix, config).run().0
}
