use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rhh_lgp::bench::{run_benchmark, to_csv, Matrix, Timing};
use rhh_lgp::driver::{plan, PlanResult, PlannerConfig};
use rhh_lgp::heuristics::HeuristicMode;
use rhh_lgp::scenes::{SceneSpec, Task, TaskId};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rhh-lgp", version, about = "Task and motion planner for modular robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one scene and write trajectory, summary and metrics files.
    Plan(PlanArgs),
    /// Run a TOML benchmark matrix and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    task: TaskId,
    #[arg(long, default_value_t = 1)]
    size: usize,
    #[arg(long, default_value = "action")]
    heuristics: HeuristicMode,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    /// Plan the whole task in one episode.
    #[arg(long)]
    no_receding: bool,
    #[arg(long)]
    backtrack: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only one crawler (climb-multi).
    #[arg(long)]
    single_crawler: bool,
    #[arg(long, default_value_t = 50_000)]
    node_budget: usize,
    /// Seconds.
    #[arg(long, default_value_t = 120.0)]
    time_budget: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Leave `time_s` empty so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

fn summary(result: &PlanResult) -> serde_json::Value {
    let episodes: Vec<_> = result
        .episodes
        .iter()
        .map(|e| {
            json!({
                "actions": e.committed_actions.iter().map(|a| a.key.as_str()).collect::<Vec<_>>(),
                "horizon": e.horizon,
                "waypoints": e.committed_trajectory.waypoints.len(),
                "cost": e.committed_trajectory.cost,
                "metrics": e.metrics,
            })
        })
        .collect();
    let trajectory = result.trajectory.as_ref();
    json!({
        "status": result.status,
        "actions": result.action_keys(),
        "episodes": episodes,
        "cost": trajectory.map(|t| t.cost),
        "max_eq_residual": trajectory.map(|t| t.max_eq_residual),
        "max_ineq_violation": trajectory.map(|t| t.max_ineq_violation),
    })
}

fn run_plan(args: PlanArgs) -> Result<()> {
    let spec = SceneSpec { single_crawler: args.single_crawler, ..SceneSpec::new(args.task, args.size) };
    let task = Task::load(spec).context("generating scene")?;
    let config = PlannerConfig {
        horizon: (!args.no_receding).then_some(args.horizon),
        node_budget: args.node_budget,
        time_budget: Duration::from_secs_f64(args.time_budget.max(0.0)),
        seed: args.seed,
        heuristics: args.heuristics,
        backtrack: args.backtrack,
        ..PlannerConfig::default()
    };
    let result = plan(&task, &config);
    log::info!("{} after {} episodes", result.status.as_str(), result.episodes.len());

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let dump = result.trajectory.as_ref().map(|t| t.dump()).unwrap_or_default();
    fs::write(args.out.join("trajectory.txt"), dump)?;
    fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&summary(&result))?)?;
    fs::write(args.out.join("metrics.json"), result.metrics.to_json())?;
    println!("{} {}", result.status.as_str(), result.metrics.to_json());
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&args.matrix).with_context(|| format!("reading {}", args.matrix.display()))?;
    let matrix: Matrix = toml::from_str(&text).context("parsing matrix")?;
    let results = run_benchmark(&matrix);
    for r in &results {
        if let Err(e) = &r.result {
            log::warn!("cell {} n={} failed: {e}", r.cell.task, r.cell.size);
        }
    }
    let timing = if args.no_timing { Timing::Omit } else { Timing::Include };
    fs::write(&args.out, to_csv(&results, timing)).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::init();
    match Cli::parse().command {
        Command::Plan(args) => run_plan(args),
        Command::Bench(args) => run_bench(args),
    }
}
