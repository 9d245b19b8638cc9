//! Geometry of a single lane change.
//!
//! Fits the quintic lateral path for a 3.5 m lane change over an 80 m run,
//! shows that slope and curvature vanish at both ends, then couples the path
//! to a constant-speed longitudinal motion and samples the full trajectory.

use mergesim::traffic::{fit_quintic, lc_trajectory};

fn main() {
    let poly = fit_quintic(50.0, 130.0, 3.5).expect("positive span");

    println!("lateral path over x in [{}, {}]:", poly.x_start, poly.x_end);
    println!("{:>8} {:>8} {:>9} {:>10}", "x", "y", "dy/dx", "d2y/dx2");
    for k in 0..=8 {
        let x = poly.x_start + (poly.x_end - poly.x_start) * k as f64 / 8.0;
        println!(
            "{:>8.1} {:>8.3} {:>9.5} {:>10.6}",
            x,
            poly.y_at(x),
            poly.slope_at(x),
            poly.curvature_proxy_at(x)
        );
    }
    println!(
        "boundary slopes: {:.1e} and {:.1e} (flat ends by construction)",
        poly.slope_at(poly.x_start),
        poly.slope_at(poly.x_end)
    );

    // Cross the span at a steady 20 m/s and watch the heading swing.
    let traj = lc_trajectory(&poly, 0.0, 50.0, 20.0, |_, _, _| 0.0, 4.0, 0.1)
        .expect("valid window");
    let max_heading = traj
        .points
        .iter()
        .map(|p| p.heading.abs())
        .fold(0.0f64, f64::max);
    let end = traj.end().expect("non-empty");
    println!();
    println!(
        "trajectory: {} samples, ends at t={:.1} x={:.1} y={:.3}, truncated={}",
        traj.points.len(),
        end.t,
        end.x,
        end.y,
        traj.truncated
    );
    println!("peak heading {:.2} deg at mid-change", max_heading.to_degrees());
}
