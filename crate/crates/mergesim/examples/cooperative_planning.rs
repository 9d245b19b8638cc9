//! One frozen merge scene, three cooperation modes, side by side.
//!
//! Builds the default traffic scenario, freezes the planning scene around the
//! ramp vehicle, and evaluates the same completion time under no cooperation,
//! longitudinal yielding, and a lateral move-aside. The printed objective
//! vectors show what each mode buys: safety headroom, fuel, and how much the
//! principals accelerate relative to plain car-following.

use mergesim::config::SimConfig;
use mergesim::optimizer::{DecisionVector, GapChoice, PlanEvaluator, VmcMode};
use mergesim::sim::scenario::build_world;
use mergesim::sim::scene::MergeScene;

fn main() {
    let cfg = SimConfig::default();
    let world = build_world(&cfg);
    let scene = MergeScene::freeze(&world, &cfg).expect("ramp vehicle present");

    println!("scene frozen at t={:.1}, ramp vehicle {:?}", scene.t0, scene.vr);
    println!(
        "roles: vmf {:?}  vmc {:?}  vmr {:?}  vnf {:?}",
        scene.roles.vmf, scene.roles.vmc, scene.roles.vmr, scene.roles.vnf
    );
    let space = scene.decision_space();
    println!(
        "completion time window [{:.1}, {:.1}] s, cooperation available: {}",
        space.t_min, space.t_max, space.longitudinal_allowed
    );

    println!();
    println!(
        "{:<16} {:>9} {:>9} {:>9} {:>9}",
        "mode", "u_safe", "u_fuel", "u_eff", "feasible"
    );
    for mode in [VmcMode::NoCooperation, VmcMode::Longitudinal, VmcMode::Lateral] {
        let plan = scene.evaluate(&DecisionVector {
            gap: GapChoice::BehindVmc,
            merge_end_time: 14.0,
            vmc_mode: mode,
        });
        let o = plan.objectives;
        println!(
            "{:<16} {:>9.3} {:>9.4} {:>9.4} {:>9}",
            format!("{mode:?}"),
            o.u_safe,
            o.u_fuel,
            o.u_eff,
            o.feasible
        );
        if let Some(art) = &plan.artifacts {
            let (lo, hi) = art.vr_guide.accel_range();
            println!(
                "    ramp guide accel in [{lo:.2}, {hi:.2}], lane change over t in [{:.1}, {:.1}], slot {:?}",
                art.vr_lc_window.0, art.vr_lc_window.1, art.gap_class
            );
        }
    }

    // Completion time trades safety against urgency within one mode.
    println!();
    println!("lateral cooperation across completion times:");
    for tf in [8.0, 11.0, 14.0, 17.0, 20.0] {
        let plan = scene.evaluate(&DecisionVector {
            gap: GapChoice::BehindVmc,
            merge_end_time: tf,
            vmc_mode: VmcMode::Lateral,
        });
        let o = plan.objectives;
        println!(
            "  tf={tf:>4.1}  u_safe {:>7.3}  u_fuel {:>7.4}  u_eff {:>8.4}  feasible {}",
            o.u_safe, o.u_fuel, o.u_eff, o.feasible
        );
    }
}
