//! Merge-quality objectives and the rule that picks one plan off a front.
//!
//! Candidate merge plans are scored on three axes, all minimized by the
//! search after sign normalization:
//!
//! * `u_safe` — the deceleration the post-merge follower would need if the
//!   merging vehicle braked hard right at slot entry; an unachievable gap is
//!   an error, not a large number.
//! * `u_fuel` — integrated fuel of the ramp vehicle and the cooperating
//!   vehicle over the merge window, from a cubic-in-speed cruise polynomial
//!   plus an acceleration surcharge.
//! * `u_eff` — acceleration incentive: the ramp vehicle's gain plus a
//!   politeness-weighted sum of its neighbors' gains. Higher is better, so
//!   the minimized form is its negation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::MergePlan;
use crate::traffic::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("gap {d_cri:.2} m cannot absorb the speed difference (margin {margin:.2} m <= 0)")]
    InfeasibleGap { d_cri: f64, margin: f64 },
    #[error("cannot select from an empty plan set")]
    EmptySelection,
}

/// Parameters of the critical-deceleration safety measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyParams {
    /// Standstill buffer kept between stopped vehicles (m).
    pub standstill_margin: f64,
    /// Follower reaction delay (s).
    pub reaction_time: f64,
    /// Hardest braking assumed available during the merge (m/s^2).
    pub merge_max_decel: f64,
    /// Plans whose critical deceleration exceeds this are only chosen when
    /// nothing safer exists (m/s^2).
    pub accept_threshold: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            standstill_margin: 2.0,
            reaction_time: 1.0,
            merge_max_decel: 6.0,
            accept_threshold: 4.0,
        }
    }
}

/// Critical deceleration forced on the follower: `v_r^2 / (2 (d_cri - D -
/// v_r T + v_f^2 / (2 a_merg)))` for follower speed `v_r`, leader speed
/// `v_f`, and bumper gap `d_cri` at merge completion.
pub fn u_safe(
    d_cri: f64,
    follower_speed: f64,
    leader_speed: f64,
    p: &SafetyParams,
) -> Result<f64, ObjectiveError> {
    let margin = d_cri - p.standstill_margin - follower_speed * p.reaction_time
        + leader_speed * leader_speed / (2.0 * p.merge_max_decel);
    if margin <= 0.0 {
        return Err(ObjectiveError::InfeasibleGap { d_cri, margin });
    }
    Ok(follower_speed * follower_speed / (2.0 * margin))
}

/// Polynomial fuel-rate model: cruise consumption cubic in speed plus an
/// acceleration surcharge quadratic in speed, active only while accelerating.
/// Coefficients are in liters per second with speed in m/s; the defaults are
/// the widely used fitted values for a mid-size passenger car.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuelModelParams {
    pub cruise: [f64; 4],
    pub accel: [f64; 3],
}

impl Default for FuelModelParams {
    fn default() -> Self {
        Self {
            cruise: [1.569e-4, 2.450e-5, -7.415e-7, 5.975e-8],
            accel: [7.224e-5, 9.681e-5, 1.075e-6],
        }
    }
}

/// Instantaneous fuel rate (L/s), floored at zero; braking earns no credit.
pub fn fuel_rate(speed: f64, accel: f64, p: &FuelModelParams) -> f64 {
    let v = speed.max(0.0);
    let cruise = ((p.cruise[3] * v + p.cruise[2]) * v + p.cruise[1]) * v + p.cruise[0];
    let surcharge = if accel > 0.0 {
        accel * ((p.accel[2] * v + p.accel[1]) * v + p.accel[0])
    } else {
        0.0
    };
    (cruise + surcharge).max(0.0)
}

fn trajectory_fuel(traj: &Trajectory, p: &FuelModelParams) -> f64 {
    let mut total = 0.0;
    for pair in traj.points.windows(2) {
        let r0 = fuel_rate(pair[0].v, pair[0].a, p);
        let r1 = fuel_rate(pair[1].v, pair[1].a, p);
        total += 0.5 * (r0 + r1) * (pair[1].t - pair[0].t);
    }
    total
}

/// Trapezoidal fuel total (L) over the merge window for the ramp vehicle and,
/// when it cooperates, the mainline vehicle.
pub fn u_fuel(vr: &Trajectory, vmc: Option<&Trajectory>, p: &FuelModelParams) -> f64 {
    trajectory_fuel(vr, p) + vmc.map_or(0.0, |t| trajectory_fuel(t, p))
}

/// Acceleration incentive of a maneuver. `before[0]` and `after[0]` belong to
/// the maneuvering vehicle; the rest are affected neighbors, discounted by
/// the politeness factor `eta`.
pub fn u_eff(before: &[f64], after: &[f64], eta: f64) -> f64 {
    assert_eq!(before.len(), after.len(), "before/after acceleration lists must pair up");
    assert!(!before.is_empty(), "the maneuvering vehicle's accelerations are required");
    let own = after[0] - before[0];
    let neighbors: f64 =
        before.iter().zip(after).skip(1).map(|(b, a)| a - b).sum();
    own + eta * neighbors
}

/// Objective triple for one candidate plan. Infeasible candidates carry the
/// penalty encoding below so that any feasible plan strictly dominates them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    /// Critical follower deceleration (m/s^2); smaller is safer.
    pub u_safe: f64,
    /// Fuel spent over the merge (L); smaller is cheaper.
    pub u_fuel: f64,
    /// Acceleration incentive (m/s^2); larger is better.
    pub u_eff: f64,
    pub feasible: bool,
}

impl ObjectiveVector {
    /// Component value standing in for every objective of an infeasible plan.
    pub const PENALTY: f64 = 1.0e6;

    pub fn infeasible() -> Self {
        Self { u_safe: Self::PENALTY, u_fuel: Self::PENALTY, u_eff: -Self::PENALTY, feasible: false }
    }

    /// The triple in uniformly minimized orientation.
    pub fn minimized(&self) -> [f64; 3] {
        [self.u_safe, self.u_fuel, -self.u_eff]
    }
}

/// `a` dominates `b`: no worse in every minimized component, better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

fn min_max_norm(value: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (value - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Reduces a non-dominated plan set to the one plan to execute.
///
/// If even the safest plan exceeds the acceptance threshold, the least unsafe
/// one is taken. Otherwise plans within the threshold compete on the sum of
/// min-max normalized fuel and negated incentive; a degenerate spread
/// contributes zero. Ties fall to the smaller `u_safe`, then to the
/// lexicographically smallest decision vector, so the choice is unique.
pub fn select_unique<'a>(
    plans: &'a [MergePlan],
    p: &SafetyParams,
) -> Result<&'a MergePlan, ObjectiveError> {
    if plans.is_empty() {
        return Err(ObjectiveError::EmptySelection);
    }
    let min_safe = plans.iter().map(|m| m.objectives.u_safe).fold(f64::INFINITY, f64::min);
    if min_safe > p.accept_threshold {
        return Ok(plans
            .iter()
            .min_by(|a, b| {
                a.objectives
                    .u_safe
                    .total_cmp(&b.objectives.u_safe)
                    .then_with(|| a.decision.lex_cmp(&b.decision))
            })
            .unwrap());
    }
    let safe: Vec<&MergePlan> =
        plans.iter().filter(|m| m.objectives.u_safe <= p.accept_threshold).collect();
    let (mut fuel_lo, mut fuel_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut eff_lo, mut eff_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in &safe {
        fuel_lo = fuel_lo.min(m.objectives.u_fuel);
        fuel_hi = fuel_hi.max(m.objectives.u_fuel);
        eff_lo = eff_lo.min(-m.objectives.u_eff);
        eff_hi = eff_hi.max(-m.objectives.u_eff);
    }
    let score = |m: &MergePlan| {
        min_max_norm(m.objectives.u_fuel, fuel_lo, fuel_hi)
            + min_max_norm(-m.objectives.u_eff, eff_lo, eff_hi)
    };
    Ok(safe
        .into_iter()
        .min_by(|a, b| {
            score(a)
                .total_cmp(&score(b))
                .then_with(|| a.objectives.u_safe.total_cmp(&b.objectives.u_safe))
                .then_with(|| a.decision.lex_cmp(&b.decision))
        })
        .unwrap())
}
