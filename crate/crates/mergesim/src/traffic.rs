//! Longitudinal car-following models and lane-change kinematics.
//!
//! Three driver models share one parameter core:
//!
//! * [`idm_accel`] — the Intelligent Driver Model evaluated on exact inputs.
//! * [`hdv_accel`] — IDM evaluated on delayed, error-scaled perceptions of
//!   gap, speed, and closing speed, reconstructed from a [`StateHistory`].
//! * [`cav_accel`] — IDM blended with a constant-acceleration heuristic that
//!   uses the leader's broadcast acceleration, which keeps automated vehicles
//!   from over-braking when the leader is already recovering.
//!
//! Lateral motion during a lane change is a quintic polynomial in the
//! longitudinal coordinate ([`fit_quintic`]); [`lc_trajectory`] couples it to
//! an arbitrary longitudinal acceleration law to produce a time-indexed path.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("lane-change span must be positive, got x_start {x_start} >= x_end {x_end}")]
    BadSpan { x_start: f64, x_end: f64 },
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("trajectory window must satisfy t0 < tf, got t0 {t0} >= tf {tf}")]
    BadWindow { t0: f64, tf: f64 },
}

/// Intelligent Driver Model parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    /// Maximum acceleration `a` (m/s^2).
    pub max_accel: f64,
    /// Desired free-flow speed `v0` (m/s).
    pub desired_speed: f64,
    /// Free-acceleration exponent `delta`.
    pub accel_exponent: f64,
    /// Standstill minimum gap `s0` (m).
    pub min_gap: f64,
    /// Desired time headway `T` (s).
    pub time_headway: f64,
    /// Comfortable deceleration `b` (m/s^2, positive).
    pub comfort_decel: f64,
    /// Hard deceleration floor (m/s^2, positive); commanded accelerations are
    /// clamped to `[-emergency_decel, max_accel]`.
    pub emergency_decel: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            max_accel: 1.4,
            desired_speed: 25.0,
            accel_exponent: 4.0,
            min_gap: 2.0,
            time_headway: 1.5,
            comfort_decel: 2.0,
            emergency_decel: 6.0,
        }
    }
}

impl IdmParams {
    /// Desired dynamic gap `s*` at the given speed and closing speed.
    pub fn desired_gap(&self, speed: f64, dspeed: f64) -> f64 {
        let dynamic = speed * self.time_headway
            + speed * dspeed / (2.0 * (self.max_accel * self.comfort_decel).sqrt());
        self.min_gap + dynamic.max(0.0)
    }

    pub fn clamp_accel(&self, a: f64) -> f64 {
        a.clamp(-self.emergency_decel, self.max_accel)
    }
}

/// IDM acceleration for a bumper-to-bumper `gap` (m), own `speed` (m/s), and
/// closing speed `dspeed = speed - lead_speed` (m/s).
///
/// `gap <= 0` commands emergency braking rather than failing; an infinite gap
/// reduces to the free-road term. The result is clamped to
/// `[-emergency_decel, max_accel]`.
pub fn idm_accel(p: &IdmParams, gap: f64, speed: f64, dspeed: f64) -> f64 {
    if gap <= 0.0 {
        return -p.emergency_decel;
    }
    let free = (speed / p.desired_speed).powf(p.accel_exponent);
    let interaction = if gap.is_finite() {
        let r = p.desired_gap(speed, dspeed) / gap;
        r * r
    } else {
        0.0
    };
    p.clamp_accel(p.max_accel * (1.0 - free - interaction))
}

/// One perceived car-following sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistorySample {
    pub t: f64,
    pub gap: f64,
    pub speed: f64,
    pub dspeed: f64,
}

/// Bounded ring of past `(gap, speed, dspeed)` samples used to evaluate a
/// human driver's delayed perception. Samples must be pushed with
/// non-decreasing timestamps.
#[derive(Debug, Clone)]
pub struct StateHistory {
    buf: VecDeque<HistorySample>,
    cap: usize,
}

impl StateHistory {
    /// `cap` is the number of retained samples; size it to cover the largest
    /// perception delay at the simulation step (`ceil(max_delay / dt) + 2`).
    pub fn with_capacity(cap: usize) -> Self {
        Self { buf: VecDeque::with_capacity(cap.max(2)), cap: cap.max(2) }
    }

    pub fn for_delays(max_delay: f64, dt: f64) -> Self {
        Self::with_capacity((max_delay / dt).ceil() as usize + 2)
    }

    pub fn push(&mut self, sample: HistorySample) {
        debug_assert!(
            self.buf.back().map_or(true, |b| sample.t >= b.t),
            "history timestamps must be non-decreasing"
        );
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(sample);
    }

    /// Forget everything; used when the perceived leader changes and old gap
    /// samples no longer describe the same pair.
    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Linearly interpolated sample at time `t`. Queries outside the retained
    /// window clamp to the oldest / newest sample.
    ///
    /// Panics if the history is empty; callers seed one sample at spawn.
    pub fn sample(&self, t: f64) -> HistorySample {
        let first = *self.buf.front().expect("history must contain at least one sample");
        if t <= first.t {
            return HistorySample { t, ..first };
        }
        let last = *self.buf.back().unwrap();
        if t >= last.t {
            return HistorySample { t, ..last };
        }
        // Ring is small (tens of samples); a linear scan from the back wins
        // over binary search bookkeeping.
        let mut prev = last;
        for s in self.buf.iter().rev().skip(1) {
            if s.t <= t {
                let span = prev.t - s.t;
                let w = if span > 0.0 { (t - s.t) / span } else { 0.0 };
                return HistorySample {
                    t,
                    gap: s.gap + w * (prev.gap - s.gap),
                    speed: s.speed + w * (prev.speed - s.speed),
                    dspeed: s.dspeed + w * (prev.dspeed - s.dspeed),
                };
            }
            prev = *s;
        }
        HistorySample { t, ..first }
    }
}

/// Human-driven vehicle parameters: IDM plus perception delays (s) and
/// multiplicative estimation error factors (dimensionless, 1.0 = exact).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdvParams {
    pub idm: IdmParams,
    pub gap_delay: f64,
    pub speed_delay: f64,
    pub dspeed_delay: f64,
    pub gap_error_factor: f64,
    pub dspeed_error_factor: f64,
}

impl Default for HdvParams {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            gap_delay: 0.5,
            speed_delay: 0.5,
            dspeed_delay: 0.5,
            gap_error_factor: 1.0,
            dspeed_error_factor: 1.0,
        }
    }
}

impl HdvParams {
    pub fn max_delay(&self) -> f64 {
        self.gap_delay.max(self.speed_delay).max(self.dspeed_delay)
    }
}

/// Human driver acceleration at time `now`: IDM applied to the gap perceived
/// `gap_delay` ago scaled by `gap_error_factor`, the own speed perceived
/// `speed_delay` ago, and the closing speed perceived `dspeed_delay` ago
/// scaled by `dspeed_error_factor`.
///
/// With all delays zero and unit error factors this reproduces [`idm_accel`]
/// on the newest sample exactly.
pub fn hdv_accel(p: &HdvParams, history: &StateHistory, now: f64) -> f64 {
    let gap = p.gap_error_factor * history.sample(now - p.gap_delay).gap;
    let speed = history.sample(now - p.speed_delay).speed;
    let dspeed = p.dspeed_error_factor * history.sample(now - p.dspeed_delay).dspeed;
    idm_accel(&p.idm, gap, speed, dspeed)
}

/// Automated vehicle parameters: IDM plus the blending weight `c` of the
/// constant-acceleration heuristic (0 = pure IDM).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavParams {
    pub idm: IdmParams,
    pub cah_weight: f64,
}

impl Default for CavParams {
    fn default() -> Self {
        Self { idm: IdmParams::default(), cah_weight: 0.99 }
    }
}

/// Constant-acceleration heuristic: the acceleration that avoids collision if
/// the leader holds its (communicated) acceleration, with no reaction to gap
/// growth beyond that. Swappable: [`cav_accel`] accepts any estimate computed
/// from the same four arguments in place of this one.
pub fn constant_accel_heuristic(
    p: &IdmParams,
    gap: f64,
    speed: f64,
    lead_speed: f64,
    lead_accel: f64,
) -> f64 {
    let eff_lead_accel = lead_accel.min(p.max_accel);
    let dspeed = speed - lead_speed;
    if lead_speed * dspeed <= -2.0 * gap * eff_lead_accel {
        let denom = lead_speed * lead_speed - 2.0 * gap * eff_lead_accel;
        if denom.abs() < 1e-12 {
            eff_lead_accel
        } else {
            speed * speed * eff_lead_accel / denom
        }
    } else {
        let closing = if dspeed > 0.0 { dspeed * dspeed / (2.0 * gap) } else { 0.0 };
        eff_lead_accel - closing
    }
}

/// Automated vehicle acceleration: `(1-c) * a_idm + c * (a_cah + b *
/// tanh((a_idm - a_cah) / b))`, clamped like IDM.
///
/// With `cah_weight = 0` this is bit-identical to [`idm_accel`].
pub fn cav_accel(p: &CavParams, gap: f64, speed: f64, lead_speed: f64, lead_accel: f64) -> f64 {
    let a_idm = idm_accel(&p.idm, gap, speed, speed - lead_speed);
    if p.cah_weight == 0.0 || !gap.is_finite() || gap <= 0.0 {
        return a_idm;
    }
    let a_cah = constant_accel_heuristic(&p.idm, gap, speed, lead_speed, lead_accel);
    let b = p.comfort_or_unit();
    let c = p.cah_weight;
    let blended = (1.0 - c) * a_idm + c * (a_cah + b * ((a_idm - a_cah) / b).tanh());
    p.idm.clamp_accel(blended)
}

impl CavParams {
    fn comfort_or_unit(&self) -> f64 {
        if self.idm.comfort_decel > 0.0 {
            self.idm.comfort_decel
        } else {
            1.0
        }
    }
}

/// Lateral lane-change path: a quintic in the longitudinal coordinate with
/// zero slope and curvature at both ends. Coefficients are stored over
/// `xi = x - x_start` to stay well conditioned far from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneChangePoly {
    pub x_start: f64,
    pub x_end: f64,
    /// Signed lateral displacement at completion (m).
    pub lateral_offset: f64,
    /// Coefficients of `y(xi) = c[0] + c[1] xi + ... + c[5] xi^5`.
    pub coeffs: [f64; 6],
}

/// Fits the unique quintic with `y(x_start) = 0`, `y(x_end) = lateral_offset`,
/// and zero first and second derivatives at both ends.
pub fn fit_quintic(
    x_start: f64,
    x_end: f64,
    lateral_offset: f64,
) -> Result<LaneChangePoly, TrafficError> {
    let span = x_end - x_start;
    if !(span > 0.0) {
        return Err(TrafficError::BadSpan { x_start, x_end });
    }
    let d = lateral_offset;
    let coeffs = [
        0.0,
        0.0,
        0.0,
        10.0 * d / span.powi(3),
        -15.0 * d / span.powi(4),
        6.0 * d / span.powi(5),
    ];
    Ok(LaneChangePoly { x_start, x_end, lateral_offset, coeffs })
}

impl LaneChangePoly {
    /// Lateral offset at `x`; outside `[x_start, x_end]` the path holds its
    /// boundary value exactly, so a finished change sits on the new center.
    pub fn y_at(&self, x: f64) -> f64 {
        let xi = x - self.x_start;
        if xi <= 0.0 {
            return 0.0;
        }
        if xi >= self.x_end - self.x_start {
            return self.lateral_offset;
        }
        let c = &self.coeffs;
        ((((c[5] * xi + c[4]) * xi + c[3]) * xi + c[2]) * xi + c[1]) * xi + c[0]
    }

    /// `dy/dx` at `x`; zero outside the span.
    pub fn slope_at(&self, x: f64) -> f64 {
        let span = self.x_end - self.x_start;
        let xi = x - self.x_start;
        if !(0.0..=span).contains(&xi) {
            return 0.0;
        }
        let c = &self.coeffs;
        (((5.0 * c[5] * xi + 4.0 * c[4]) * xi + 3.0 * c[3]) * xi + 2.0 * c[2]) * xi + c[1]
    }

    pub fn curvature_proxy_at(&self, x: f64) -> f64 {
        let span = self.x_end - self.x_start;
        let xi = x - self.x_start;
        if !(0.0..=span).contains(&xi) {
            return 0.0;
        }
        let c = &self.coeffs;
        ((20.0 * c[5] * xi + 12.0 * c[4]) * xi + 6.0 * c[3]) * xi + 2.0 * c[2]
    }
}

/// One planned or simulated pose sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    /// Heading relative to the road axis (rad).
    pub heading: f64,
}

/// Uniformly sampled planned motion. `truncated` marks a path whose
/// longitudinal coordinate left the lane-change span before the end time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub points: Vec<TrajPoint>,
    pub truncated: bool,
}

impl Trajectory {
    pub fn start_time(&self) -> Option<f64> {
        self.points.first().map(|p| p.t)
    }

    pub fn end(&self) -> Option<&TrajPoint> {
        self.points.last()
    }
}

/// Integrates a lane change: longitudinal motion from `accel_fn(t, x, v)` by
/// explicit trapezoidal (Heun) steps, lateral position slaved to the quintic.
///
/// Emission stops with `truncated = true` as soon as `x` leaves
/// `[x_start, x_end]`; otherwise samples run from `t0` to `tf` inclusive.
pub fn lc_trajectory(
    poly: &LaneChangePoly,
    t0: f64,
    x0: f64,
    v0: f64,
    mut accel_fn: impl FnMut(f64, f64, f64) -> f64,
    tf: f64,
    dt: f64,
) -> Result<Trajectory, TrafficError> {
    if !(dt > 0.0) {
        return Err(TrafficError::BadTimeStep(dt));
    }
    if !(tf > t0) {
        return Err(TrafficError::BadWindow { t0, tf });
    }
    let steps = ((tf - t0) / dt).round() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    let mut truncated = false;
    let (mut t, mut x, mut v) = (t0, x0, v0);
    let mut a = accel_fn(t, x, v);
    points.push(sample_point(poly, t, x, v, a));
    for _ in 0..steps {
        let v_pred = (v + a * dt).max(0.0);
        let x_pred = x + v * dt;
        let a_pred = accel_fn(t + dt, x_pred, v_pred);
        let v_next = (v + 0.5 * (a + a_pred) * dt).max(0.0);
        let x_next = x + 0.5 * (v + v_next) * dt;
        t += dt;
        x = x_next;
        v = v_next;
        a = a_pred;
        points.push(sample_point(poly, t, x, v, a));
        if x < poly.x_start || x > poly.x_end {
            truncated = true;
            break;
        }
    }
    Ok(Trajectory { dt, points, truncated })
}

fn sample_point(poly: &LaneChangePoly, t: f64, x: f64, v: f64, a: f64) -> TrajPoint {
    TrajPoint { t, x, y: poly.y_at(x), v, a, heading: poly.slope_at(x).atan() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> IdmParams {
        IdmParams {
            max_accel: 1.4,
            desired_speed: 33.3,
            accel_exponent: 4.0,
            min_gap: 2.0,
            time_headway: 1.5,
            comfort_decel: 2.0,
            emergency_decel: 6.0,
        }
    }

    #[test]
    fn idm_matches_hand_computed_value() {
        // s* = 2 + 15*1.5 + 15*3 / (2 sqrt(1.4*2)); a = 1.4 (1 - (15/33.3)^4 - (s*/20)^2)
        let p = params();
        let s_star = 2.0 + 15.0 * 1.5 + 15.0 * 3.0 / (2.0 * (1.4f64 * 2.0).sqrt());
        let expected = 1.4 * (1.0 - (15.0f64 / 33.3).powi(4) - (s_star / 20.0).powi(2));
        assert_relative_eq!(idm_accel(&p, 20.0, 15.0, 3.0), expected, max_relative = 1e-12);
        assert!(expected < 0.0 && expected > -6.0);
    }

    #[test]
    fn idm_equilibrium_gap_gives_zero_net_accel() {
        let p = params();
        let v = 20.0;
        // At dspeed = 0 the root of eq(1) is s = s*(v) / sqrt(1 - (v/v0)^delta).
        let gap = p.desired_gap(v, 0.0) / (1.0 - (v / p.desired_speed).powi(4)).sqrt();
        assert_relative_eq!(idm_accel(&p, gap, v, 0.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn idm_emergency_and_free_road_limits() {
        let p = params();
        assert_eq!(idm_accel(&p, 0.0, 10.0, 0.0), -6.0);
        assert_eq!(idm_accel(&p, -3.0, 10.0, 0.0), -6.0);
        assert_eq!(idm_accel(&p, 1e-4, 30.0, 10.0), -6.0);
        let free = idm_accel(&p, f64::INFINITY, 0.0, 0.0);
        assert_relative_eq!(free, p.max_accel, max_relative = 1e-12);
    }

    #[test]
    fn idm_monotone_in_gap_and_closing_speed() {
        let p = params();
        let mut last = f64::NEG_INFINITY;
        for gap in [5.0, 10.0, 20.0, 40.0, 80.0, 160.0] {
            let a = idm_accel(&p, gap, 20.0, 0.0);
            assert!(a >= last, "accel must not decrease as the gap opens");
            last = a;
        }
        let mut last = f64::INFINITY;
        for dspeed in [-4.0, -2.0, 0.0, 2.0, 4.0] {
            let a = idm_accel(&p, 30.0, 20.0, dspeed);
            assert!(a <= last, "accel must not increase as closing speed grows");
            last = a;
        }
    }

    #[test]
    fn history_interpolates_and_clamps() {
        let mut h = StateHistory::with_capacity(8);
        for k in 0..5 {
            let t = k as f64 * 0.1;
            h.push(HistorySample { t, gap: 10.0 + t, speed: 20.0 - t, dspeed: t });
        }
        let s = h.sample(0.25);
        assert_relative_eq!(s.gap, 10.25, epsilon = 1e-12);
        assert_relative_eq!(s.speed, 19.75, epsilon = 1e-12);
        assert_relative_eq!(s.dspeed, 0.25, epsilon = 1e-12);
        // Pre-history queries clamp to the oldest retained sample.
        assert_eq!(h.sample(-5.0).gap, 10.0);
        assert_eq!(h.sample(99.0).gap, 10.4);
    }

    #[test]
    fn history_evicts_oldest_at_capacity() {
        let mut h = StateHistory::with_capacity(3);
        for k in 0..10 {
            h.push(HistorySample { t: k as f64, gap: k as f64, speed: 0.0, dspeed: 0.0 });
        }
        assert_eq!(h.sample(0.0).gap, 7.0, "oldest retained sample is t = 7");
    }

    #[test]
    fn hdv_without_delays_is_exactly_idm() {
        let p = HdvParams {
            gap_delay: 0.0,
            speed_delay: 0.0,
            dspeed_delay: 0.0,
            gap_error_factor: 1.0,
            dspeed_error_factor: 1.0,
            idm: params(),
        };
        let mut h = StateHistory::with_capacity(4);
        h.push(HistorySample { t: 0.0, gap: 17.0, speed: 21.0, dspeed: -1.5 });
        let a = hdv_accel(&p, &h, 0.0);
        assert_eq!(a.to_bits(), idm_accel(&p.idm, 17.0, 21.0, -1.5).to_bits());
    }

    #[test]
    fn hdv_reads_delayed_perceptions() {
        let p = HdvParams { gap_delay: 0.4, speed_delay: 0.2, dspeed_delay: 0.0, ..HdvParams { idm: params(), ..Default::default() } };
        let mut h = StateHistory::with_capacity(16);
        for k in 0..=10 {
            let t = k as f64 * 0.1;
            h.push(HistorySample { t, gap: 30.0 - 10.0 * t, speed: 20.0 + t, dspeed: t });
        }
        let a = hdv_accel(&p, &h, 1.0);
        let expected = idm_accel(&p.idm, 30.0 - 10.0 * 0.6, 20.0 + 0.8, 1.0);
        assert_relative_eq!(a, expected, epsilon = 1e-12);
    }

    #[test]
    fn cav_with_zero_weight_is_exactly_idm() {
        let p = CavParams { idm: params(), cah_weight: 0.0 };
        let a = cav_accel(&p, 25.0, 22.0, 18.0, -1.0);
        assert_eq!(a.to_bits(), idm_accel(&p.idm, 25.0, 22.0, 4.0).to_bits());
    }

    #[test]
    fn cav_brakes_less_than_idm_when_leader_recovers() {
        // Small gap but the leader is pulling away and accelerating: IDM
        // over-brakes, the heuristic blend relaxes it.
        let p = CavParams { idm: params(), cah_weight: 0.99 };
        let (gap, v, v_lead, a_lead) = (8.0, 20.0, 22.0, 1.0);
        let idm = idm_accel(&p.idm, gap, v, v - v_lead);
        let cav = cav_accel(&p, gap, v, v_lead, a_lead);
        assert!(cav > idm, "blend {cav} should exceed plain idm {idm}");
        assert!(cav <= p.idm.max_accel + 1e-12);
    }

    #[test]
    fn cah_branches_are_continuous_at_the_switch() {
        let p = params();
        let (gap, speed) = (20.0, 24.0);
        for lead_speed in [5.0_f64, 12.0, 19.0] {
            // Solve the branch condition v_l * (v - v_l) = -2 s a~ for a~.
            let a_tilde = -lead_speed * (speed - lead_speed) / (2.0 * gap);
            let lo = constant_accel_heuristic(&p, gap, speed, lead_speed, a_tilde - 1e-9);
            let hi = constant_accel_heuristic(&p, gap, speed, lead_speed, a_tilde + 1e-9);
            assert_relative_eq!(lo, hi, epsilon = 1e-6);
        }
    }

    #[test]
    fn quintic_hits_both_boundary_conditions() {
        let poly = fit_quintic(140.0, 260.0, 3.75).unwrap();
        assert!(poly.y_at(140.0).abs() < 1e-9);
        assert!((poly.y_at(260.0) - 3.75).abs() < 1e-9);
        assert!(poly.slope_at(140.0).abs() < 1e-9);
        assert!(poly.slope_at(260.0).abs() < 1e-9);
        assert!(poly.curvature_proxy_at(140.0).abs() < 1e-9);
        assert!(poly.curvature_proxy_at(260.0).abs() < 1e-9);
    }

    #[test]
    fn quintic_midpoint_value() {
        // y(u) = d (10u^3 - 15u^4 + 6u^5); at u = 1/4: d * 0.103515625.
        let poly = fit_quintic(0.0, 100.0, 3.75).unwrap();
        assert_relative_eq!(poly.y_at(25.0), 3.75 * 0.103515625, epsilon = 1e-12);
    }

    #[test]
    fn quintic_is_monotone_and_clamped() {
        let poly = fit_quintic(0.0, 80.0, -3.75).unwrap();
        let mut last = 0.0;
        for k in 0..=80 {
            let y = poly.y_at(k as f64);
            assert!(y <= last + 1e-12, "descending change must be monotone");
            assert!((-3.75..=0.0).contains(&y));
            last = y;
        }
        assert_eq!(poly.y_at(-10.0), 0.0);
        assert_eq!(poly.y_at(500.0), -3.75);
    }

    #[test]
    fn quintic_rejects_empty_span() {
        assert_eq!(
            fit_quintic(5.0, 5.0, 3.75).unwrap_err(),
            TrafficError::BadSpan { x_start: 5.0, x_end: 5.0 }
        );
    }

    #[test]
    fn lane_change_trajectory_constant_accel_is_exact() {
        // x(4) = 20*4 + 0.5*0.5*16 = 84; trapezoidal steps are exact for
        // linear speed profiles.
        let poly = fit_quintic(0.0, 100.0, 3.75).unwrap();
        let traj = lc_trajectory(&poly, 0.0, 0.0, 20.0, |_, _, _| 0.5, 4.0, 0.1).unwrap();
        let end = traj.end().unwrap();
        assert_relative_eq!(end.x, 84.0, epsilon = 1e-9);
        assert_relative_eq!(end.v, 22.0, epsilon = 1e-9);
        assert!(!traj.truncated);
        assert_eq!(traj.points.len(), 41);
    }

    #[test]
    fn lane_change_trajectory_converges_second_order() {
        let poly = fit_quintic(0.0, 500.0, 3.75).unwrap();
        // a = 0.3 sin t => v = 15 + 0.3 (1 - cos t), x = 15 t + 0.3 (t - sin t).
        let exact_x = |t: f64| 15.0 * t + 0.3 * (t - t.sin());
        let run = |dt: f64| {
            lc_trajectory(&poly, 0.0, 0.0, 15.0, |t, _, _| 0.3 * t.sin(), 8.0, dt)
                .unwrap()
                .end()
                .unwrap()
                .x
        };
        let err_coarse = (run(0.1) - exact_x(8.0)).abs();
        let err_fine = (run(0.05) - exact_x(8.0)).abs();
        assert!(err_coarse < 2e-3);
        assert!(err_fine < err_coarse / 3.0, "halving dt must shrink error ~4x");
    }

    #[test]
    fn lane_change_trajectory_flags_truncation() {
        let poly = fit_quintic(0.0, 30.0, 3.75).unwrap();
        let traj = lc_trajectory(&poly, 0.0, 0.0, 20.0, |_, _, _| 0.0, 4.0, 0.1).unwrap();
        assert!(traj.truncated);
        let end = traj.end().unwrap();
        assert!(end.x > 30.0 && end.t < 4.0);
        assert_eq!(end.y, 3.75, "lateral offset clamps at the boundary value");
    }
}
