//! Three search methods on the same frozen planning problem.
//!
//! The evolutionary front search, particle swarm, and simulated annealing
//! each pick a merge plan for an identical scene and seed. The swarm and
//! annealer minimize the scalarized cost directly; the front search selects
//! from its non-dominated set. With the completion-time grid at simulation
//! resolution all three land on the same decision.

use mergesim::config::SimConfig;
use mergesim::objectives::select_unique;
use mergesim::optimizer::nsga2::nsga2_run;
use mergesim::optimizer::pso::pso_run;
use mergesim::optimizer::sa::sa_run;
use mergesim::optimizer::{scalarized_cost, MergePlan};
use mergesim::sim::scenario::build_world;
use mergesim::sim::scene::MergeScene;

fn show(name: &str, plan: &MergePlan, cfg: &SimConfig) {
    let d = plan.decision;
    let cost = scalarized_cost(&plan.objectives, &cfg.scalar, cfg.safety.accept_threshold);
    println!(
        "{name:<22} {:?} slot, tf={:>5.1}, {:<15} cost {cost:.6}",
        d.gap,
        d.merge_end_time,
        format!("{:?}", d.vmc_mode)
    );
}

fn main() {
    let cfg = SimConfig::default();
    let world = build_world(&cfg);
    let scene = MergeScene::freeze(&world, &cfg).expect("ramp vehicle present");
    let space = scene.decision_space();
    let threshold = cfg.safety.accept_threshold;

    let front = nsga2_run(&scene, &space, &cfg.ga, cfg.seed);
    let feasible: Vec<_> = front.iter().filter(|p| p.objectives.feasible).cloned().collect();
    let evo = select_unique(&feasible, &cfg.safety).expect("non-empty front");
    let swarm = pso_run(&scene, &space, &cfg.pso, &cfg.scalar, threshold, cfg.seed);
    let anneal = sa_run(&scene, &space, &cfg.sa, &cfg.scalar, threshold, cfg.seed);

    show("evolutionary front", evo, &cfg);
    show("particle swarm", &swarm, &cfg);
    show("simulated annealing", &anneal, &cfg);
}
