//! One full closed-loop merge, from plan to settled traffic.
//!
//! Runs the cooperative controller on the default scenario and prints the
//! event timeline, the adopted plan, and the run metrics. Rerunning with the
//! same seed reproduces every byte.

use mergesim::config::SimConfig;
use mergesim::sim::{self, metrics::compute_metrics};

fn main() {
    let cfg = SimConfig::default();
    let rec = sim::run(&cfg);

    println!("simulated {:.0} s of traffic, {} vehicles", rec.duration, rec.traces.len());
    println!();
    for e in &rec.events {
        println!("  {e:?}");
    }

    if let Some(plan) = &rec.adopted_plan {
        let d = plan.decision;
        println!();
        println!(
            "adopted plan: {:?} slot, complete by t={:.1}, {:?} cooperation",
            d.gap, d.merge_end_time, d.vmc_mode
        );
    }
    if let Some(t) = rec.merge_time {
        println!("ramp vehicle merged at t={t:.1}");
    }

    let m = compute_metrics(&rec, &cfg.metrics, &cfg.fuel);
    println!();
    println!("metrics:");
    println!("  critical distance   {:>8.2} m", m.crit_dist);
    println!("  mean |accel|        {:>8.3} m/s^2", m.aver_acc);
    println!("  stabilization time  {:>8.2} s", m.stab_time);
    println!("  speed dispersion    {:>8.3}", m.lsrv);
    println!("  fuel                {:>8.3} L", m.fuel);
}
