//! Oriented-rectangle overlap tests and merge-slot classification.
//!
//! First scans two angled footprints toward each other to find the overlap
//! onset, then checks a close-cut merge path against mainline traffic and
//! classifies which slot the ramp vehicle's planned path actually takes.

use mergesim::collision::{
    classify_merge_gap, footprints_collide, trajectories_collide, VehicleFootprint,
};
use mergesim::traffic::{fit_quintic, lc_trajectory, TrajPoint, Trajectory};

/// Constant-speed straight line in a lane at lateral position `y`.
fn straight(x0: f64, v: f64, y: f64, tf: f64, dt: f64) -> Trajectory {
    let steps = (tf / dt).round() as usize;
    let points = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            TrajPoint { t, x: x0 + v * t, y, v, a: 0.0, heading: 0.0 }
        })
        .collect();
    Trajectory { dt, points, truncated: false }
}

fn main() {
    let ego = VehicleFootprint { x: 0.0, y: 0.0, heading: 0.0, length: 5.0, width: 2.0 };
    println!("slightly angled car closing in from the side:");
    for dx in [6.0, 5.0, 4.5, 4.0, 3.5] {
        let other =
            VehicleFootprint { x: dx, y: 1.8, heading: 0.12, length: 5.0, width: 2.0 };
        println!("  dx={dx:4.1}  overlap={}", footprints_collide(&ego, &other));
    }

    // A ramp vehicle cutting across while a mainline car occupies the target.
    let dt = 0.1;
    let poly = fit_quintic(50.0, 130.0, 3.5).expect("positive span");
    let vr = lc_trajectory(&poly, 0.0, 50.0, 20.0, |_, _, _| 0.0, 6.0, dt)
        .expect("valid window");
    let dims = (5.0, 2.0);

    let blocker = straight(49.0, 20.0, 3.5, 6.0, dt);
    match trajectories_collide(&vr, dims, &blocker, dims).expect("aligned timebases") {
        Some(hit) => println!("\ncut-in against an occupied slot collides at t={:.1}", hit.t),
        None => println!("\ncut-in against an occupied slot stays clear"),
    }

    // The same path against progressively arranged neighbors.
    let cases = [
        ("open slot ahead", straight(20.0, 20.0, 3.5, 6.0, dt), None),
        (
            "slot between two cars",
            straight(70.0, 20.0, 3.5, 6.0, dt),
            Some(straight(10.0, 20.0, 3.5, 6.0, dt)),
        ),
        (
            "no room at all",
            straight(52.0, 20.0, 3.5, 6.0, dt),
            Some(straight(47.0, 20.0, 3.5, 6.0, dt)),
        ),
    ];
    println!();
    for (name, vmc, vmr) in &cases {
        let class = classify_merge_gap(
            &vr,
            dims,
            Some((vmc, dims)),
            vmr.as_ref().map(|t| (t, dims)),
        )
        .expect("aligned timebases");
        println!("{name:22} -> {class:?}");
    }
}
