//! Batch execution: the condition grid comparing controllers, and the
//! optimizer comparison on paired seeds. Every cell is an independent
//! deterministic run; aggregation happens after all cells finish.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::{Condition, ControllerKind, OptimizerKind, SimConfig, CONDITIONS};
use crate::sim;
use crate::sim::metrics::compute_metrics;
use crate::sim::result::{
    write_metrics_csv, write_trajectory_csv, MetricsRow, RunMetrics, RunRecord,
};

/// One executed grid cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub condition: Condition,
    pub controller: ControllerKind,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub collided: bool,
    pub plan_cost: Option<f64>,
}

/// Applies one cell's coordinates onto the base configuration and runs it.
pub fn run_cell(
    base: &SimConfig,
    condition: Option<Condition>,
    controller: ControllerKind,
    optimizer: OptimizerKind,
    seed: u64,
) -> (SimConfig, RunRecord, RunMetrics) {
    let mut cfg = base.clone();
    if let Some(c) = condition {
        c.apply(&mut cfg);
    }
    cfg.controller = controller;
    cfg.optimizer = optimizer;
    cfg.seed = seed;
    let rec = sim::run(&cfg);
    let metrics = compute_metrics(&rec, &cfg.metrics, &cfg.fuel);
    (cfg, rec, metrics)
}

fn mean_metrics(all: &[RunMetrics]) -> RunMetrics {
    let n = all.len().max(1) as f64;
    let sum = all.iter().fold([0.0; 5], |acc, m| {
        [
            acc[0] + m.crit_dist,
            acc[1] + m.aver_acc,
            acc[2] + m.stab_time,
            acc[3] + m.lsrv,
            acc[4] + m.fuel,
        ]
    });
    RunMetrics {
        crit_dist: sum[0] / n,
        aver_acc: sum[1] / n,
        stab_time: sum[2] / n,
        lsrv: sum[3] / n,
        fuel: sum[4] / n,
    }
}

fn write_trajectory_file(path: &Path, rec: &RunRecord) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trajectory_csv(&mut out, rec)?;
    out.flush()
}

#[derive(Debug, Clone)]
pub struct GridSummary {
    /// One aggregated row per condition and controller, in grid order.
    pub rows: Vec<MetricsRow>,
    pub cells: Vec<CellOutcome>,
    pub any_collision: bool,
}

/// Runs the full condition grid for both controllers, one run per seed per
/// cell, writing per-run trajectories and one aggregated metrics table.
pub fn run_grid(
    base: &SimConfig,
    optimizer: OptimizerKind,
    seeds: &[u64],
    out_dir: &Path,
) -> io::Result<GridSummary> {
    fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut any_collision = false;
    for condition in CONDITIONS {
        for controller in [ControllerKind::Hcomc, ControllerKind::Fifo] {
            let mut batch = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let (_, rec, metrics) =
                    run_cell(base, Some(condition), controller, optimizer, seed);
                let name = format!(
                    "trajectory_c{condition}_{controller}_{optimizer}_seed{seed}.csv"
                );
                write_trajectory_file(&out_dir.join(name), &rec)?;
                any_collision |= rec.collided;
                cells.push(CellOutcome {
                    condition,
                    controller,
                    optimizer,
                    seed,
                    metrics,
                    collided: rec.collided,
                    plan_cost: rec.plan_cost,
                });
                batch.push(metrics);
            }
            rows.push(MetricsRow {
                condition: condition.to_string(),
                controller: controller.to_string(),
                optimizer: optimizer.to_string(),
                metrics: mean_metrics(&batch),
            });
        }
    }
    let mut out = BufWriter::new(File::create(out_dir.join("metrics.csv"))?);
    write_metrics_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(GridSummary { rows, cells, any_collision })
}

/// Per-optimizer aggregate of the paired-seed comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub optimizer: OptimizerKind,
    pub mean_metrics: RunMetrics,
    /// Mean decision cost of the adopted plans; planning failures count as
    /// the prohibitive infeasible cost.
    pub mean_cost: f64,
    pub costs: Vec<f64>,
}

pub const COMPARISON_HEADER: &str =
    "condition,optimizer,seed,plan_cost,crit_dist,aver_acc,stab_time,lsrv,fuel";

/// Runs the cooperative controller under each optimizer on identical seeds
/// and scenes, reporting run metrics and the decision cost per seed.
pub fn compare_optimizers(
    base: &SimConfig,
    condition: Condition,
    seeds: &[u64],
    out_dir: &Path,
) -> io::Result<Vec<CompareRow>> {
    fs::create_dir_all(out_dir)?;
    let mut out =
        BufWriter::new(File::create(out_dir.join("optimizer_comparison.csv"))?);
    writeln!(out, "{COMPARISON_HEADER}")?;
    let mut rows = Vec::new();
    for optimizer in [OptimizerKind::Nsga2, OptimizerKind::Pso, OptimizerKind::Sa] {
        let mut batch = Vec::with_capacity(seeds.len());
        let mut costs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let (_, rec, metrics) =
                run_cell(base, Some(condition), ControllerKind::Hcomc, optimizer, seed);
            let cost = rec.plan_cost.unwrap_or(1.0e9);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                condition,
                optimizer,
                seed,
                cost,
                metrics.crit_dist,
                metrics.aver_acc,
                metrics.stab_time,
                metrics.lsrv,
                metrics.fuel
            )?;
            batch.push(metrics);
            costs.push(cost);
        }
        let mean_cost = costs.iter().sum::<f64>() / costs.len().max(1) as f64;
        rows.push(CompareRow {
            optimizer,
            mean_metrics: mean_metrics(&batch),
            mean_cost,
            costs,
        });
    }
    out.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_metrics_average_componentwise() {
        let a = RunMetrics { crit_dist: 10.0, aver_acc: 0.2, stab_time: 4.0, lsrv: 100.0, fuel: 1.0 };
        let b = RunMetrics { crit_dist: 20.0, aver_acc: 0.4, stab_time: 8.0, lsrv: 300.0, fuel: 3.0 };
        let m = mean_metrics(&[a, b]);
        assert_eq!(m.crit_dist, 15.0);
        assert_eq!(m.aver_acc, 0.30000000000000004);
        assert_eq!(m.stab_time, 6.0);
        assert_eq!(m.lsrv, 200.0);
        assert_eq!(m.fuel, 2.0);
    }

    #[test]
    fn one_cell_grid_emits_trajectories_and_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let base = SimConfig::default();
        let summary =
            run_grid(&base, OptimizerKind::Pso, &[42], dir.path()).unwrap();
        assert_eq!(summary.rows.len(), 10, "five conditions, two controllers");
        assert_eq!(summary.cells.len(), 10);
        assert!(dir.path().join("metrics.csv").exists());
        let count = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(count, 11, "ten trajectory files plus the metrics table");
    }
}
