//! Benchmark matrix runner producing one CSV row per cell.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Deserialize;

use crate::driver::{plan, PlanResult, PlannerConfig};
use crate::heuristics::HeuristicMode;
use crate::scenes::{SceneError, SceneSpec, Task, TaskId};

pub const CSV_HEADER: &str = "task,scene_size,heuristics,horizon,time_s,tree_nodes,expanded,sol_len,status";

/// One benchmark configuration. `horizon = None` runs the non-iterative planner.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub task: TaskId,
    pub size: usize,
    #[serde(default = "default_heuristics")]
    pub heuristics: HeuristicMode,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_node_budget")]
    pub node_budget: usize,
    /// Seconds.
    #[serde(default = "default_time_budget")]
    pub time_budget: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub single_crawler: bool,
    #[serde(default)]
    pub backtrack: bool,
}

fn default_heuristics() -> HeuristicMode {
    HeuristicMode::ActionSpecific
}

fn default_node_budget() -> usize {
    50_000
}

fn default_time_budget() -> f64 {
    120.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrix {
    #[serde(default, rename = "cell")]
    pub cells: Vec<Cell>,
}

#[derive(Debug)]
pub struct CellResult {
    pub cell: Cell,
    /// Scene generation errors are kept per cell.
    pub result: Result<PlanResult, SceneError>,
}

/// Whether the `time_s` column carries wall time or is left empty, which
/// makes reports byte-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Include,
    Omit,
}

impl Cell {
    pub fn config(&self) -> PlannerConfig {
        PlannerConfig {
            horizon: self.horizon,
            node_budget: self.node_budget,
            time_budget: Duration::from_secs_f64(self.time_budget.max(0.0)),
            seed: self.seed,
            heuristics: self.heuristics,
            backtrack: self.backtrack,
            ..PlannerConfig::default()
        }
    }

    pub fn scene(&self) -> SceneSpec {
        SceneSpec { single_crawler: self.single_crawler, ..SceneSpec::new(self.task, self.size) }
    }

    pub fn run(&self) -> CellResult {
        let result = Task::load(self.scene()).map(|task| plan(&task, &self.config()));
        CellResult { cell: self.clone(), result }
    }
}

impl CellResult {
    pub fn csv_row(&self, timing: Timing) -> String {
        let (m, status) = match &self.result {
            Ok(r) => (r.metrics.clone(), r.status.as_str()),
            Err(_) => (Default::default(), "error"),
        };
        let time = match timing {
            Timing::Include => format!("{:.3}", m.time_s),
            Timing::Omit => String::new(),
        };
        let horizon = self.cell.horizon.map_or_else(|| "inf".to_string(), |h| h.to_string());
        let sol_len = m.sol_len.map_or_else(String::new, |l| l.to_string());
        let heuristics = self.cell.heuristics.as_str();
        let task = if self.cell.single_crawler {
            format!("{}-single", self.cell.task)
        } else {
            self.cell.task.to_string()
        };
        format!(
            "{task},{},{heuristics},{horizon},{time},{},{},{sol_len},{status}",
            self.cell.size, m.tree_nodes, m.expanded,
        )
    }
}

/// Runs every cell in order.
pub fn run_benchmark(matrix: &Matrix) -> Vec<CellResult> {
    matrix.cells.iter().map(Cell::run).collect()
}

pub fn to_csv(results: &[CellResult], timing: Timing) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(out, "{}", r.csv_row(timing));
    }
    out
}
