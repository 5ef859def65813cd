//! Receding-horizon outer loop: search, commit the verified prefix, advance,
//! repeat until the goal holds.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::heuristics::HeuristicMode;
use crate::kinematics::{KinematicWorld, KinematicsError};
use crate::motion::{BoundLevel, BuildOptions, Trajectory};
use crate::scenes::Task;
use crate::search::{run_inner_loop, BoundRecord, SearchConfig, SearchMetrics, SearchStatus};
use crate::symbolic::{apply, is_goal, DomainError, GroundAction, SymbolTable, SymbolicState};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Actions committed per episode; `None` plans the whole task at once.
    pub horizon: Option<usize>,
    pub node_budget: usize,
    pub time_budget: Duration,
    pub seed: u64,
    pub heuristics: HeuristicMode,
    /// Defaults to `4 * (scene size + robot count)`.
    pub depth_limit: Option<usize>,
    pub steps_per_phase: usize,
    pub backtrack: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: Some(3),
            node_budget: 50_000,
            time_budget: Duration::from_secs(120),
            seed: 0,
            heuristics: HeuristicMode::ActionSpecific,
            depth_limit: None,
            steps_per_phase: 20,
            backtrack: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    Solved,
    Infeasible,
    Timeout,
}

impl PlanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanStatus::Solved => "solved",
            PlanStatus::Infeasible => "infeasible",
            PlanStatus::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub start_state: SymbolicState,
    pub start_world: KinematicWorld,
    pub committed_actions: Vec<GroundAction>,
    pub committed_trajectory: Trajectory,
    /// Horizon the episode was planned with (grows under backtracking).
    pub horizon: usize,
    pub metrics: SearchMetrics,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub episodes: Vec<Episode>,
    pub actions: Vec<GroundAction>,
    pub trajectory: Option<Trajectory>,
    pub final_state: SymbolicState,
    pub final_world: KinematicWorld,
    pub metrics: SearchMetrics,
    /// Search metrics of failed attempts (including backtracking retries).
    pub failed_metrics: Vec<SearchMetrics>,
    /// Bound verdicts of every search, in episode order.
    pub bounds: Vec<BoundRecord>,
}

impl PlanResult {
    pub fn action_keys(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.key.clone()).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AdvanceError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("trajectory covers {phases} phases but {actions} actions were committed")]
    PhaseMismatch { phases: usize, actions: usize },
}

/// Applies the committed actions symbolically and kinematically. Each mode
/// switch happens at the final waypoint of its phase.
pub fn advance_state(
    actions: &[GroundAction],
    trajectory: &Trajectory,
    world: &KinematicWorld,
    state: &SymbolicState,
    symbols: &SymbolTable,
) -> Result<(KinematicWorld, SymbolicState), AdvanceError> {
    let mut w = world.clone();
    let mut s = state.clone();
    if actions.is_empty() {
        return Ok((w, s));
    }
    for (k, a) in actions.iter().enumerate() {
        let phase = k + 1;
        let last = trajectory
            .phase
            .iter()
            .rposition(|&p| p == phase)
            .ok_or(AdvanceError::PhaseMismatch { phases: trajectory.phase.last().copied().unwrap_or(0), actions: actions.len() })?;
        w.set_joints(trajectory.waypoints[last].clone())?;
        s = apply(&s, a)?;
        w = w.apply_action(a, symbols)?;
    }
    w.set_joints(trajectory.last().to_vec())?;
    Ok((w, s))
}

/// Concatenates episode trajectories into one with global phase numbers.
pub fn stitch(episodes: &[Episode]) -> Option<Trajectory> {
    let first = episodes.first()?;
    let mut out = Trajectory {
        level: BoundLevel::Path,
        pre: first.committed_trajectory.pre.clone(),
        waypoints: Vec::new(),
        velocities: Vec::new(),
        accelerations: Vec::new(),
        phase: Vec::new(),
        border: Vec::new(),
        cost: 0.0,
        max_eq_residual: 0.0,
        max_ineq_violation: 0.0,
        x: Vec::new(),
    };
    let mut offset = 0;
    for e in episodes {
        let t = &e.committed_trajectory;
        out.waypoints.extend(t.waypoints.iter().cloned());
        out.velocities.extend(t.velocities.iter().cloned());
        out.accelerations.extend(t.accelerations.iter().cloned());
        out.phase.extend(t.phase.iter().map(|p| p + offset));
        out.border.extend(t.border.iter().copied());
        out.cost += t.cost;
        out.max_eq_residual = out.max_eq_residual.max(t.max_eq_residual);
        out.max_ineq_violation = out.max_ineq_violation.max(t.max_ineq_violation);
        offset += e.committed_actions.len();
    }
    Some(out)
}

pub fn plan(task: &Task, config: &PlannerConfig) -> PlanResult {
    plan_with_hook(task, config, |_, _| {})
}

/// Like [`plan`], calling `hook(episode_index, world)` before every episode
/// so callers can mutate the world between episodes.
pub fn plan_with_hook(
    task: &Task,
    config: &PlannerConfig,
    mut hook: impl FnMut(usize, &mut KinematicWorld),
) -> PlanResult {
    let start = Instant::now();
    let actions = task.domain.ground().expect("generated domains ground");
    let depth_limit = config.depth_limit.unwrap_or(4 * (task.spec.size + task.spec.robot_count()));
    let base_horizon = config.horizon.unwrap_or(usize::MAX).max(1);

    let mut world = task.world.clone();
    let mut state = task.domain.init.clone();
    let mut episodes: Vec<Episode> = Vec::new();
    let mut failed_metrics = Vec::new();
    let mut total = SearchMetrics::default();
    let mut growth = 0usize;
    let mut bounds = Vec::new();

    let status = loop {
        if is_goal(&state, &task.domain.goal) {
            break PlanStatus::Solved;
        }
        let elapsed = start.elapsed();
        if elapsed >= config.time_budget || total.tree_nodes >= config.node_budget {
            break PlanStatus::Timeout;
        }
        hook(episodes.len(), &mut world);
        let horizon = base_horizon.saturating_mul(growth + 1);
        let search = SearchConfig {
            horizon,
            node_budget: config.node_budget - total.tree_nodes,
            time_budget: config.time_budget - elapsed,
            seed: config.seed,
            mode: config.heuristics,
            depth_limit,
            build: BuildOptions { steps_per_phase: config.steps_per_phase },
        };
        let prefix = episodes.last().map(|e| e.committed_trajectory.clone());
        let run = run_inner_loop(&world, &task.domain, &actions, state.clone(), prefix.as_ref(), search);
        total.accumulate(&run.metrics);
        bounds.extend(run.bounds);
        match run.status {
            SearchStatus::Found(found) => {
                let committed = found.skeleton.actions.clone();
                log::debug!(
                    "episode {}: committed {}",
                    episodes.len(),
                    committed.iter().map(|a| a.key.as_str()).collect::<Vec<_>>().join(" ")
                );
                let traj = found.path.trajectory.clone();
                let (next_world, next_state) =
                    advance_state(&committed, &traj, &world, &state, &task.domain.symbols).expect("verified skeleton advances");
                episodes.push(Episode {
                    start_state: state.clone(),
                    start_world: world.clone(),
                    committed_actions: committed,
                    committed_trajectory: traj,
                    horizon,
                    metrics: run.metrics,
                });
                world = next_world;
                state = next_state;
                growth = 0;
            }
            SearchStatus::Timeout => {
                failed_metrics.push(run.metrics);
                break PlanStatus::Timeout;
            }
            SearchStatus::Exhausted => {
                failed_metrics.push(run.metrics);
                // re-open the previous episode(s) with a longer window
                if config.backtrack && config.horizon.is_some() && growth < episodes.len() {
                    growth += 1;
                    log::debug!("episode {} exhausted, reopening {growth} episode(s)", episodes.len());
                    for _ in 0..growth.min(episodes.len()) {
                        if let Some(e) = episodes.pop() {
                            world = e.start_world;
                            state = e.start_state;
                        }
                    }
                    continue;
                }
                break PlanStatus::Infeasible;
            }
        }
    };
    total.time_s = start.elapsed().as_secs_f64();
    let actions: Vec<GroundAction> = episodes.iter().flat_map(|e| e.committed_actions.iter().cloned()).collect();
    total.sol_len = (status == PlanStatus::Solved).then_some(actions.len());
    PlanResult {
        status,
        trajectory: stitch(&episodes),
        episodes,
        actions,
        final_state: state,
        final_world: world,
        metrics: total,
        failed_metrics,
        bounds,
    }
}
