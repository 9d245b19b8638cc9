//! Desk-scale run of the full experiment grid.
//!
//! Sweeps every traffic condition with both controllers over two seeds,
//! writes per-run trajectory files and the aggregated metrics table to a
//! temporary directory, and prints the controller head-to-head per
//! condition.

use std::env;

use mergesim::config::{OptimizerKind, SimConfig};
use mergesim::experiment::run_grid;

fn main() {
    let cfg = SimConfig::default();
    let seeds = [42, 43];
    let out = env::temp_dir().join("mergesim_grid_example");

    let summary =
        run_grid(&cfg, OptimizerKind::Nsga2, &seeds, &out).expect("writable out dir");

    println!("wrote {} runs to {}", summary.cells.len(), out.display());
    println!("any collision: {}", summary.any_collision);
    println!();
    println!(
        "{:<5} {:<6} {:>10} {:>9} {:>10} {:>7} {:>7}",
        "cond", "ctrl", "crit_dist", "aver_acc", "stab_time", "lsrv", "fuel"
    );
    for row in &summary.rows {
        let m = &row.metrics;
        println!(
            "{:<5} {:<6} {:>10.2} {:>9.3} {:>10.2} {:>7.3} {:>7.3}",
            row.condition, row.controller, m.crit_dist, m.aver_acc, m.stab_time, m.lsrv, m.fuel
        );
    }
}
