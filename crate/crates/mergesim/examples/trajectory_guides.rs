//! Virtual-leader trajectories: boundary-value fit, limits, and handover.
//!
//! A merging vehicle must leave its current state and arrive at a target
//! slot state at a chosen time. The cubic fit hits both boundary conditions
//! exactly; the acceleration screen rejects completion times that would
//! demand more than the vehicle can do; the tanh blend hands control from
//! the car-following model to the guide without an acceleration step.

use mergesim::planning::{
    plan_longitudinal_vr, solve_cubic_bvp, AccelLimits, KinState, TransitionBlend,
};

fn main() {
    let entry = KinState { x: 120.0, v: 22.0 };
    let exit = KinState { x: 430.0, v: 24.0 };
    let motion = solve_cubic_bvp(0.0, 14.0, entry, exit).expect("horizon long enough");

    println!("cubic guide from ({:.0} m, {:.0} m/s) to ({:.0} m, {:.0} m/s) in 14 s:", entry.x, entry.v, exit.x, exit.v);
    println!(
        "  endpoint residuals: dx={:.2e}, dv={:.2e}",
        (motion.position(14.0) - exit.x).abs(),
        (motion.speed(14.0) - exit.v).abs()
    );
    let (lo, hi) = motion.accel_range();
    println!("  acceleration stays in [{lo:.3}, {hi:.3}] m/s^2");
    println!("{:>6} {:>9} {:>8} {:>8}", "t", "x", "v", "a");
    for k in 0..=7 {
        let t = 14.0 * k as f64 / 7.0;
        println!("{:>6.1} {:>9.2} {:>8.2} {:>8.3}", t, motion.position(t), motion.speed(t), motion.accel(t));
    }

    // The same boundary states on a tighter deadline exceed the limits.
    let limits = AccelLimits { max_accel: 2.5, max_decel: 4.0 };
    for tf in [14.0, 9.0, 6.0] {
        match plan_longitudinal_vr(entry, exit, 0.0, tf, limits) {
            Ok(_) => println!("complete by {tf:>4.1} s: feasible"),
            Err(e) => println!("complete by {tf:>4.1} s: rejected ({e})"),
        }
    }

    let blend = TransitionBlend::from_window(2.0, 4.0).expect("forward window");
    println!("\nhandover weight over the 2 s blend window:");
    for k in 0..=6 {
        let t = 2.0 + 2.0 * k as f64 / 6.0;
        println!("  t={t:.2}  psi={:.4}", blend.psi(t));
    }
    let a = blend.blended_accel(-0.8, 1.2, 3.0);
    println!("mid-window mix of -0.8 and 1.2 m/s^2: {a:.3}");
}
