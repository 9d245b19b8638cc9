//! Virtual-vehicle motion planning for cooperative merging.
//!
//! The planner never commands accelerations directly. It fits a cubic
//! position polynomial between two boundary states (position and speed at
//! entry and exit) and hands the result to a vehicle as a *virtual leader*;
//! the vehicle's own car-following controller tracks it. Two instances cover
//! the merge: one guides the ramp vehicle into its slot, one guides the
//! cooperating mainline vehicle into the neighbor lane. A hyperbolic-tangent
//! blend fades a vehicle's commanded acceleration from its old reference to
//! the new one so a leader handover never steps the control signal.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanningError {
    #[error("planning horizon {horizon:.3} s is below the {min:.1} s minimum; the boundary fit is ill-conditioned")]
    HorizonTooShort { horizon: f64, min: f64 },
    #[error("plan demands {required:.2} m/s^2, outside the drivable range [{lo:.2}, {hi:.2}]")]
    InfeasiblePlan { required: f64, lo: f64, hi: f64 },
    #[error("blend window must satisfy t_begin < t_end, got [{0}, {1}]")]
    BadBlendWindow(f64, f64),
}

/// Shortest horizon the cubic fit accepts.
pub const MIN_PLAN_HORIZON: f64 = 0.5;

/// Longitudinal kinematic boundary state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinState {
    pub x: f64,
    pub v: f64,
}

/// Drivable acceleration envelope for feasibility screening; both bounds are
/// magnitudes of the usual vehicle limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelLimits {
    pub max_accel: f64,
    pub max_decel: f64,
}

/// Cubic position profile `x(tau) = b0 + b1 tau + b2 tau^2 + b3 tau^3` over
/// `tau = t - t_begin`. Outside the window the motion extrapolates at the
/// boundary speed, so a virtual leader keeps cruising after its plan ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicMotion {
    pub t_begin: f64,
    pub t_end: f64,
    pub coeffs: [f64; 4],
}

impl CubicMotion {
    pub fn position(&self, t: f64) -> f64 {
        let [b0, b1, b2, b3] = self.coeffs;
        if t <= self.t_begin {
            return b0 + b1 * (t - self.t_begin);
        }
        if t >= self.t_end {
            return self.position_in(self.t_end) + self.speed_in(self.t_end) * (t - self.t_end);
        }
        let tau = t - self.t_begin;
        ((b3 * tau + b2) * tau + b1) * tau + b0
    }

    pub fn speed(&self, t: f64) -> f64 {
        let tau = (t - self.t_begin).clamp(0.0, self.t_end - self.t_begin);
        self.speed_at_tau(tau)
    }

    pub fn accel(&self, t: f64) -> f64 {
        if t < self.t_begin || t > self.t_end {
            return 0.0;
        }
        let [_, _, b2, b3] = self.coeffs;
        2.0 * b2 + 6.0 * b3 * (t - self.t_begin)
    }

    /// Acceleration extremes over the plan window. The profile is linear in
    /// time, so the extremes sit at the endpoints.
    pub fn accel_range(&self) -> (f64, f64) {
        let a0 = 2.0 * self.coeffs[2];
        let a1 = a0 + 6.0 * self.coeffs[3] * (self.t_end - self.t_begin);
        (a0.min(a1), a0.max(a1))
    }

    fn position_in(&self, t: f64) -> f64 {
        let [b0, b1, b2, b3] = self.coeffs;
        let tau = t - self.t_begin;
        ((b3 * tau + b2) * tau + b1) * tau + b0
    }

    fn speed_in(&self, t: f64) -> f64 {
        self.speed_at_tau(t - self.t_begin)
    }

    fn speed_at_tau(&self, tau: f64) -> f64 {
        let [_, b1, b2, b3] = self.coeffs;
        (3.0 * b3 * tau + 2.0 * b2) * tau + b1
    }
}

/// Fits the unique cubic matching position and speed at both boundary times.
pub fn solve_cubic_bvp(
    t0: f64,
    tf: f64,
    entry: KinState,
    exit: KinState,
) -> Result<CubicMotion, PlanningError> {
    let horizon = tf - t0;
    if !(horizon >= MIN_PLAN_HORIZON) {
        return Err(PlanningError::HorizonTooShort { horizon, min: MIN_PLAN_HORIZON });
    }
    let dx = exit.x - entry.x;
    let b2 = 3.0 * dx / (horizon * horizon) - (2.0 * entry.v + exit.v) / horizon;
    let b3 = -2.0 * dx / (horizon * horizon * horizon)
        + (entry.v + exit.v) / (horizon * horizon);
    Ok(CubicMotion { t_begin: t0, t_end: tf, coeffs: [entry.x, entry.v, b2, b3] })
}

fn screened(motion: CubicMotion, limits: AccelLimits) -> Result<CubicMotion, PlanningError> {
    let (lo, hi) = motion.accel_range();
    if lo < -limits.max_decel || hi > limits.max_accel {
        let required = if hi > limits.max_accel { hi } else { lo };
        return Err(PlanningError::InfeasiblePlan {
            required,
            lo: -limits.max_decel,
            hi: limits.max_accel,
        });
    }
    Ok(motion)
}

/// Virtual leader guiding the ramp vehicle: departs from the mainline front
/// vehicle's state and arrives at the ramp vehicle's required merge state.
pub fn plan_longitudinal_vr(
    vmf_entry: KinState,
    vr_exit: KinState,
    t0: f64,
    tf: f64,
    limits: AccelLimits,
) -> Result<CubicMotion, PlanningError> {
    screened(solve_cubic_bvp(t0, tf, vmf_entry, vr_exit)?, limits)
}

/// Virtual leader guiding the cooperating vehicle into the neighbor lane:
/// departs from that lane's front vehicle and arrives at the cooperating
/// vehicle's target slot.
pub fn plan_lateral_vmc(
    vnf_entry: KinState,
    vmc_exit: KinState,
    t0: f64,
    tf: f64,
    limits: AccelLimits,
) -> Result<CubicMotion, PlanningError> {
    screened(solve_cubic_bvp(t0, tf, vnf_entry, vmc_exit)?, limits)
}

/// Smooth handover weight `psi(t) = (tanh(lambda t - gamma) + 1) / 2`,
/// calibrated so `lambda t - gamma` sweeps [-3, 3] across the window: the
/// weight starts below 0.005 and ends above 0.995.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionBlend {
    pub lambda: f64,
    pub gamma: f64,
}

impl TransitionBlend {
    pub fn from_window(t_begin: f64, t_end: f64) -> Result<Self, PlanningError> {
        if !(t_end > t_begin) {
            return Err(PlanningError::BadBlendWindow(t_begin, t_end));
        }
        let lambda = 6.0 / (t_end - t_begin);
        Ok(Self { lambda, gamma: lambda * t_begin + 3.0 })
    }

    pub fn psi(&self, t: f64) -> f64 {
        0.5 * ((self.lambda * t - self.gamma).tanh() + 1.0)
    }

    /// Acceleration faded from the old reference to the new one.
    pub fn blended_accel(&self, a_ori: f64, a_new: f64, t: f64) -> f64 {
        let w = self.psi(t);
        w * a_new + (1.0 - w) * a_ori
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Gaussian elimination on the raw 4x4 boundary system in absolute time;
    /// kept independent of the closed form above.
    fn solve_dense(t0: f64, tf: f64, x0: f64, v0: f64, xf: f64, vf: f64) -> [f64; 4] {
        let mut m = [
            [1.0, t0, t0 * t0, t0 * t0 * t0, x0],
            [1.0, tf, tf * tf, tf * tf * tf, xf],
            [0.0, 1.0, 2.0 * t0, 3.0 * t0 * t0, v0],
            [0.0, 1.0, 2.0 * tf, 3.0 * tf * tf, vf],
        ];
        for col in 0..4 {
            let pivot = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
            m.swap(col, pivot);
            for row in 0..4 {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..5 {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        [m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]]
    }

    #[test]
    fn cubic_matches_independent_linear_solve() {
        let cases = [
            (0.0, 8.0, 120.0, 24.0, 310.0, 22.0),
            (3.5, 12.0, -40.0, 18.0, 160.0, 25.0),
            (10.0, 11.0, 0.0, 30.0, 28.0, 26.0),
        ];
        for (t0, tf, x0, v0, xf, vf) in cases {
            let motion =
                solve_cubic_bvp(t0, tf, KinState { x: x0, v: v0 }, KinState { x: xf, v: vf })
                    .unwrap();
            let dense = solve_dense(t0, tf, x0, v0, xf, vf);
            for k in 0..=20 {
                let t = t0 + (tf - t0) * k as f64 / 20.0;
                let x_dense = dense[0] + dense[1] * t + dense[2] * t * t + dense[3] * t * t * t;
                assert_relative_eq!(motion.position(t), x_dense, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn cubic_boundary_residuals_are_tiny() {
        let entry = KinState { x: 842.0, v: 27.3 };
        let exit = KinState { x: 1105.5, v: 21.9 };
        let motion = solve_cubic_bvp(100.0, 111.5, entry, exit).unwrap();
        assert!((motion.position(100.0) - entry.x).abs() < 1e-9);
        assert!((motion.position(111.5) - exit.x).abs() < 1e-9);
        assert!((motion.speed(100.0) - entry.v).abs() < 1e-9);
        assert!((motion.speed(111.5) - exit.v).abs() < 1e-9);
    }

    #[test]
    fn cubic_extrapolates_at_boundary_speeds() {
        let motion =
            solve_cubic_bvp(0.0, 10.0, KinState { x: 0.0, v: 20.0 }, KinState { x: 230.0, v: 26.0 })
                .unwrap();
        assert_relative_eq!(motion.position(12.0), 230.0 + 2.0 * 26.0, epsilon = 1e-9);
        assert_relative_eq!(motion.position(-1.0), -20.0, epsilon = 1e-9);
        assert_relative_eq!(motion.speed(15.0), 26.0, epsilon = 1e-9);
        assert_eq!(motion.accel(15.0), 0.0);
    }

    #[test]
    fn accel_range_matches_dense_sampling() {
        let motion =
            solve_cubic_bvp(2.0, 9.0, KinState { x: 50.0, v: 15.0 }, KinState { x: 200.0, v: 28.0 })
                .unwrap();
        let (lo, hi) = motion.accel_range();
        let mut seen_lo = f64::INFINITY;
        let mut seen_hi = f64::NEG_INFINITY;
        for k in 0..=1000 {
            let a = motion.accel(2.0 + 7.0 * k as f64 / 1000.0);
            seen_lo = seen_lo.min(a);
            seen_hi = seen_hi.max(a);
        }
        assert_relative_eq!(lo, seen_lo, epsilon = 1e-9);
        assert_relative_eq!(hi, seen_hi, epsilon = 1e-9);
    }

    #[test]
    fn short_horizons_are_rejected() {
        let err = solve_cubic_bvp(0.0, 0.3, KinState { x: 0.0, v: 20.0 }, KinState { x: 6.0, v: 20.0 })
            .unwrap_err();
        assert_eq!(err, PlanningError::HorizonTooShort { horizon: 0.3, min: 0.5 });
    }

    #[test]
    fn undrivable_plans_are_rejected() {
        let limits = AccelLimits { max_accel: 1.4, max_decel: 6.0 };
        // Reaching a point 60 m back at the same speed in 4 s needs far more
        // braking than 6 m/s^2.
        let err = plan_longitudinal_vr(
            KinState { x: 100.0, v: 25.0 },
            KinState { x: 140.0, v: 25.0 },
            0.0,
            4.0,
            limits,
        )
        .unwrap_err();
        assert!(matches!(err, PlanningError::InfeasiblePlan { .. }));
        // A gentle speed adjustment passes.
        plan_longitudinal_vr(
            KinState { x: 100.0, v: 25.0 },
            KinState { x: 245.0, v: 23.0 },
            0.0,
            6.0,
            limits,
        )
        .unwrap();
    }

    #[test]
    fn blend_weights_saturate_at_window_edges() {
        let blend = TransitionBlend::from_window(4.0, 8.0).unwrap();
        let lo = 0.5 * ((-3.0f64).tanh() + 1.0);
        assert_relative_eq!(blend.psi(4.0), lo, epsilon = 1e-12);
        assert_relative_eq!(blend.psi(8.0), 1.0 - lo, epsilon = 1e-12);
        assert!(blend.psi(4.0) <= 0.005);
        assert!(blend.psi(8.0) >= 0.995);
        assert_relative_eq!(blend.psi(6.0), 0.5, epsilon = 1e-12);
        let mut last = -1.0;
        for k in 0..=100 {
            let w = blend.psi(4.0 + 4.0 * k as f64 / 100.0);
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn blended_accel_interpolates_references() {
        let blend = TransitionBlend::from_window(0.0, 2.0).unwrap();
        assert_relative_eq!(blend.blended_accel(-2.0, 1.0, 1.0), -0.5, epsilon = 1e-12);
        assert_relative_eq!(blend.blended_accel(-2.0, 1.0, 50.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(blend.blended_accel(-2.0, 1.0, -50.0), -2.0, epsilon = 1e-12);
        assert_eq!(
            TransitionBlend::from_window(2.0, 2.0).unwrap_err(),
            PlanningError::BadBlendWindow(2.0, 2.0)
        );
    }
}
