//! Multi-objective search over merge plans and the final pick.
//!
//! Runs the evolutionary optimizer on a frozen merge scene, prints the
//! non-dominated front it returns, and applies the two-stage selection rule:
//! prefer plans under the braking-severity threshold, then the best
//! normalized fuel/efficiency trade among them.

use mergesim::config::SimConfig;
use mergesim::objectives::select_unique;
use mergesim::optimizer::nsga2::nsga2_run;
use mergesim::sim::scenario::build_world;
use mergesim::sim::scene::MergeScene;

fn main() {
    let cfg = SimConfig::default();
    let world = build_world(&cfg);
    let scene = MergeScene::freeze(&world, &cfg).expect("ramp vehicle present");
    let space = scene.decision_space();

    let front = nsga2_run(&scene, &space, &cfg.ga, cfg.seed);
    let feasible: Vec<_> = front.iter().filter(|p| p.objectives.feasible).cloned().collect();
    println!(
        "front holds {} plans, {} feasible; threshold {:.1} m/s^2",
        front.len(),
        feasible.len(),
        cfg.safety.accept_threshold
    );
    println!();
    println!(
        "{:<13} {:>6} {:<15} {:>8} {:>8} {:>9}",
        "slot", "tf", "mode", "u_safe", "u_fuel", "u_eff"
    );
    for p in &feasible {
        let d = p.decision;
        println!(
            "{:<13} {:>6.1} {:<15} {:>8.3} {:>8.4} {:>9.4}",
            format!("{:?}", d.gap),
            d.merge_end_time,
            format!("{:?}", d.vmc_mode),
            p.objectives.u_safe,
            p.objectives.u_fuel,
            p.objectives.u_eff
        );
    }

    let chosen = select_unique(&feasible, &cfg.safety).expect("non-empty front");
    let d = chosen.decision;
    println!();
    println!(
        "selected: {:?} slot, tf={:.1}, {:?} (u_safe {:.3}, u_fuel {:.4}, u_eff {:.4})",
        d.gap,
        d.merge_end_time,
        d.vmc_mode,
        chosen.objectives.u_safe,
        chosen.objectives.u_fuel,
        chosen.objectives.u_eff
    );
}
