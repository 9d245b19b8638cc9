//! Leader-follower game deciding discretionary lane changes.
//!
//! The subject vehicle (SV) leads: it either changes lane or keeps
//! following. The new-lane rear vehicle (FV) responds with one of four
//! maneuvers, and its driving style is uncertain: payoffs are computed per
//! style, the follower best-responds per style, and the leader minimizes the
//! style-weighted expectation of its own cost. Payoffs come from short
//! deterministic rollouts of the six-vehicle neighborhood; each cost blends
//! safety (collision and critical deceleration), efficiency (negated
//! acceleration incentive), and comfort (mean squared acceleration).
//!
//! A mixed-equilibrium solver over the same payoff tensor is available as an
//! alternative to the default leader-follower logic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{footprints_collide, VehicleFootprint};
use crate::objectives::{u_eff, u_safe, SafetyParams};
use crate::traffic::{fit_quintic, idm_accel, IdmParams, LaneChangePoly};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("style probabilities must sum to 1, got {0}")]
    BadDistribution(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvAction {
    ChangeLane,
    KeepFollowing,
}

pub const SV_ACTIONS: [SvAction; 2] = [SvAction::ChangeLane, SvAction::KeepFollowing];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvAction {
    ChangeLane,
    ConstantSpeed,
    Accelerate,
    Decelerate,
}

pub const FV_ACTIONS: [FvAction; 4] =
    [FvAction::ChangeLane, FvAction::ConstantSpeed, FvAction::Accelerate, FvAction::Decelerate];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionProfile {
    pub sv: SvAction,
    pub fv: FvAction,
}

/// Follower driving styles; they rescale the follower's headway and
/// acceleration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvType {
    Aggressive,
    Normal,
    Conservative,
}

pub const FV_TYPES: [FvType; 3] = [FvType::Aggressive, FvType::Normal, FvType::Conservative];

impl FvType {
    pub fn apply(self, idm: &IdmParams) -> IdmParams {
        let (headway_scale, accel_scale) = match self {
            FvType::Aggressive => (0.7, 1.3),
            FvType::Normal => (1.0, 1.0),
            FvType::Conservative => (1.4, 0.8),
        };
        IdmParams {
            time_headway: idm.time_headway * headway_scale,
            max_accel: idm.max_accel * accel_scale,
            ..*idm
        }
    }
}

/// Probability the follower drives each style.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FvTypeDistribution {
    pub aggressive: f64,
    pub normal: f64,
    pub conservative: f64,
}

impl Default for FvTypeDistribution {
    fn default() -> Self {
        Self { aggressive: 0.2, normal: 0.5, conservative: 0.3 }
    }
}

impl FvTypeDistribution {
    pub fn validate(&self) -> Result<(), GameError> {
        let sum = self.aggressive + self.normal + self.conservative;
        if (sum - 1.0).abs() > 1e-9 || self.aggressive < 0.0 || self.normal < 0.0 || self.conservative < 0.0
        {
            return Err(GameError::BadDistribution(sum));
        }
        Ok(())
    }

    pub fn prob(&self, t: FvType) -> f64 {
        match t {
            FvType::Aggressive => self.aggressive,
            FvType::Normal => self.normal,
            FvType::Conservative => self.conservative,
        }
    }
}

/// Frozen kinematic state of one vehicle in the neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSnapshot {
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub length: f64,
    pub width: f64,
    pub idm: IdmParams,
}

/// The neighborhood the game reasons about: the subject vehicle, its leader
/// and follower in the current lane, and the leader and follower in the
/// target lane. The target-lane follower is the responding player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalScene {
    pub sv: VehicleSnapshot,
    pub cur_leader: Option<VehicleSnapshot>,
    pub cur_follower: Option<VehicleSnapshot>,
    pub tgt_leader: Option<VehicleSnapshot>,
    pub tgt_follower: Option<VehicleSnapshot>,
    /// Signed lateral offset from the current to the target lane center (m).
    pub lane_offset: f64,
}

/// Cost weights and rollout settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub safety_weight: f64,
    pub efficiency_weight: f64,
    pub comfort_weight: f64,
    pub collision_penalty: f64,
    /// Rollout horizon (s).
    pub horizon: f64,
    pub dt: f64,
    /// Magnitude of the follower's open-loop speed-up / slow-down (m/s^2).
    pub accel_step: f64,
    /// Lane-change duration inside rollouts (s).
    pub lc_duration: f64,
    /// Politeness factor of the acceleration incentive.
    pub politeness: f64,
    pub safety: SafetyParams,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            safety_weight: 1.0,
            efficiency_weight: 0.5,
            comfort_weight: 0.2,
            collision_penalty: 1.0e4,
            horizon: 5.0,
            dt: 0.1,
            accel_step: 1.0,
            lc_duration: 4.0,
            politeness: 0.5,
            safety: SafetyParams::default(),
        }
    }
}

/// Both players' rollout costs for one action profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffPair {
    pub sv: f64,
    pub fv: f64,
}

/// Costs for every (style, leader action, follower action) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMatrix {
    pub entries: [[[PayoffPair; 4]; 2]; 3],
}

impl PayoffMatrix {
    pub fn at(&self, t: FvType, sv: SvAction, fv: FvAction) -> PayoffPair {
        self.entries[type_index(t)][sv_index(sv)][fv_index(fv)]
    }
}

fn type_index(t: FvType) -> usize {
    match t {
        FvType::Aggressive => 0,
        FvType::Normal => 1,
        FvType::Conservative => 2,
    }
}

fn sv_index(a: SvAction) -> usize {
    match a {
        SvAction::ChangeLane => 0,
        SvAction::KeepFollowing => 1,
    }
}

fn fv_index(a: FvAction) -> usize {
    match a {
        FvAction::ChangeLane => 0,
        FvAction::ConstantSpeed => 1,
        FvAction::Accelerate => 2,
        FvAction::Decelerate => 3,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Sv,
    CurLeader,
    CurFollower,
    TgtLeader,
    TgtFollower,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LaneTag {
    Current,
    Target,
}

struct Body {
    slot: Slot,
    x: f64,
    y: f64,
    v: f64,
    a: f64,
    length: f64,
    width: f64,
    idm: IdmParams,
    home: LaneTag,
    changing_to: Option<LaneTag>,
    poly: Option<LaneChangePoly>,
    sum_sq_accel: f64,
    collided: bool,
}

impl Body {
    fn occupies(&self, lane: LaneTag) -> bool {
        self.home == lane || self.changing_to == Some(lane)
    }

    fn primary_lane(&self, lane_offset: f64) -> LaneTag {
        let to_cur = self.y.abs();
        let to_tgt = (self.y - lane_offset).abs();
        if to_tgt < to_cur {
            LaneTag::Target
        } else {
            LaneTag::Current
        }
    }
}

fn make_body(slot: Slot, s: &VehicleSnapshot, home: LaneTag, lane_offset: f64) -> Body {
    Body {
        slot,
        x: s.x,
        y: match home {
            LaneTag::Current => 0.0,
            LaneTag::Target => lane_offset,
        },
        v: s.v,
        a: s.a,
        length: s.length,
        width: s.width,
        idm: s.idm,
        home,
        changing_to: None,
        poly: None,
        sum_sq_accel: 0.0,
        collided: false,
    }
}

fn begin_change(body: &mut Body, to: LaneTag, lane_offset: f64, duration: f64) {
    let span = (body.v * duration).max(1.0);
    let offset = match to {
        LaneTag::Target => lane_offset,
        LaneTag::Current => -lane_offset,
    };
    body.poly = Some(fit_quintic(body.x, body.x + span, offset).expect("positive span"));
    body.changing_to = Some(to);
}

fn nearest_ahead(bodies: &[Body], me: usize, lane: LaneTag) -> Option<usize> {
    let my_x = bodies[me].x;
    let mut best: Option<usize> = None;
    for (i, b) in bodies.iter().enumerate() {
        if i == me || !b.occupies(lane) || b.x <= my_x {
            continue;
        }
        if best.map_or(true, |j| b.x < bodies[j].x) {
            best = Some(i);
        }
    }
    best
}

fn following_accel(bodies: &[Body], me: usize, lane: LaneTag) -> f64 {
    let b = &bodies[me];
    match nearest_ahead(bodies, me, lane) {
        Some(j) => {
            let lead = &bodies[j];
            let gap = lead.x - b.x - 0.5 * (lead.length + b.length);
            idm_accel(&b.idm, gap, b.v, b.v - lead.v)
        }
        None => idm_accel(&b.idm, f64::INFINITY, b.v, 0.0),
    }
}

/// Car-following over every lane the body currently occupies; the most
/// constraining lane wins.
fn occupied_min_accel(bodies: &[Body], me: usize) -> f64 {
    let mut a = f64::INFINITY;
    for lane in [LaneTag::Current, LaneTag::Target] {
        if bodies[me].occupies(lane) {
            a = a.min(following_accel(bodies, me, lane));
        }
    }
    a
}

/// Rolls the neighborhood forward under one action profile and returns both
/// players' costs. Deterministic: same inputs, same costs.
pub fn rollout_payoff(
    scene: &LocalScene,
    profile: ActionProfile,
    fv_type: FvType,
    cfg: &GameConfig,
) -> PayoffPair {
    let off = scene.lane_offset;
    let mut bodies: Vec<Body> = Vec::with_capacity(5);
    bodies.push(make_body(Slot::Sv, &scene.sv, LaneTag::Current, off));
    if let Some(s) = scene.cur_leader {
        bodies.push(make_body(Slot::CurLeader, &s, LaneTag::Current, off));
    }
    if let Some(s) = scene.cur_follower {
        bodies.push(make_body(Slot::CurFollower, &s, LaneTag::Current, off));
    }
    if let Some(s) = scene.tgt_leader {
        bodies.push(make_body(Slot::TgtLeader, &s, LaneTag::Target, off));
    }
    if let Some(s) = scene.tgt_follower {
        let mut b = make_body(Slot::TgtFollower, &s, LaneTag::Target, off);
        b.idm = fv_type.apply(&s.idm);
        bodies.push(b);
    }
    let sv_i = 0;
    let fv_i = bodies.iter().position(|b| b.slot == Slot::TgtFollower);
    if profile.sv == SvAction::ChangeLane {
        begin_change(&mut bodies[sv_i], LaneTag::Target, off, cfg.lc_duration);
    }
    if profile.fv == FvAction::ChangeLane {
        if let Some(i) = fv_i {
            begin_change(&mut bodies[i], LaneTag::Current, off, cfg.lc_duration);
        }
    }
    let before: Vec<f64> = bodies.iter().map(|b| b.a).collect();
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let mut any_collision = false;
    for _ in 0..steps {
        // All accelerations from the pre-step state.
        let mut accels = vec![0.0f64; bodies.len()];
        for i in 0..bodies.len() {
            let desired_speed = bodies[i].idm.desired_speed;
            accels[i] = match bodies[i].slot {
                Slot::TgtFollower => match profile.fv {
                    FvAction::ConstantSpeed => 0.0,
                    FvAction::Accelerate => {
                        if bodies[i].v < desired_speed {
                            cfg.accel_step
                        } else {
                            0.0
                        }
                    }
                    FvAction::Decelerate => {
                        if bodies[i].v > 0.0 {
                            -cfg.accel_step
                        } else {
                            0.0
                        }
                    }
                    FvAction::ChangeLane => occupied_min_accel(&bodies, i),
                },
                _ => occupied_min_accel(&bodies, i),
            };
        }
        for (i, b) in bodies.iter_mut().enumerate() {
            b.a = b.idm.clamp_accel(accels[i]);
            b.v = (b.v + b.a * cfg.dt).max(0.0);
            b.x += b.v * cfg.dt;
            if let Some(poly) = b.poly {
                let base = match b.home {
                    LaneTag::Current => 0.0,
                    LaneTag::Target => off,
                };
                b.y = base + poly.y_at(b.x);
                if b.x >= poly.x_end {
                    b.home = b.changing_to.take().unwrap_or(b.home);
                    b.poly = None;
                }
            }
            b.sum_sq_accel += b.a * b.a;
        }
        for i in 0..bodies.len() {
            for j in (i + 1)..bodies.len() {
                let fi = footprint(&bodies[i]);
                let fj = footprint(&bodies[j]);
                if footprints_collide(&fi, &fj) {
                    bodies[i].collided = true;
                    bodies[j].collided = true;
                    any_collision = true;
                }
            }
        }
        if any_collision {
            break;
        }
    }
    let after: Vec<f64> = bodies.iter().map(|b| b.a).collect();
    let steps_run = steps.max(1) as f64;
    let cost_for = |idx: usize| -> f64 {
        let b = &bodies[idx];
        let mut safety = if b.collided { cfg.collision_penalty } else { 0.0 };
        let lane = b.primary_lane(off);
        if let Some(j) = nearest_ahead(&bodies, idx, lane) {
            let lead = &bodies[j];
            let gap = lead.x - b.x - 0.5 * (lead.length + b.length);
            match u_safe(gap, b.v, lead.v, &cfg.safety) {
                Ok(u) => safety += u,
                Err(_) => safety += cfg.collision_penalty,
            }
        }
        // Incentive from this vehicle's viewpoint: it leads, others follow.
        let mut b_list = vec![before[idx]];
        let mut a_list = vec![after[idx]];
        for k in 0..bodies.len() {
            if k != idx {
                b_list.push(before[k]);
                a_list.push(after[k]);
            }
        }
        let incentive = u_eff(&b_list, &a_list, cfg.politeness);
        let comfort = b.sum_sq_accel / steps_run;
        cfg.safety_weight * safety - cfg.efficiency_weight * incentive
            + cfg.comfort_weight * comfort
    };
    PayoffPair { sv: cost_for(sv_i), fv: fv_i.map_or(0.0, cost_for) }
}

fn footprint(b: &Body) -> VehicleFootprint {
    let heading = match (&b.poly, b.changing_to) {
        (Some(poly), Some(_)) => poly.slope_at(b.x).atan(),
        _ => 0.0,
    };
    VehicleFootprint { x: b.x, y: b.y, heading, length: b.length, width: b.width }
}

/// Evaluates every profile under every follower style.
pub fn build_payoffs(scene: &LocalScene, cfg: &GameConfig) -> PayoffMatrix {
    let mut entries = [[[PayoffPair { sv: 0.0, fv: 0.0 }; 4]; 2]; 3];
    for t in FV_TYPES {
        for sv in SV_ACTIONS {
            for fv in FV_ACTIONS {
                entries[type_index(t)][sv_index(sv)][fv_index(fv)] =
                    rollout_payoff(scene, ActionProfile { sv, fv }, t, cfg);
            }
        }
    }
    PayoffMatrix { entries }
}

/// Outcome of the leader-follower logic: the leader's action and the
/// follower response anticipated for each style. The expected costs of
/// both leader actions ride along so callers can demand a margin before
/// acting on the argmin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneChangeDecision {
    pub action: SvAction,
    /// Indexed like [`FV_TYPES`].
    pub responses: [FvAction; 3],
    pub expected_change: f64,
    pub expected_keep: f64,
}

/// Bilevel argmin over an explicit payoff tensor: the follower best-responds
/// per style (ties keep the earlier action in [`FV_ACTIONS`]); the leader
/// minimizes its style-expected cost. An exact cost tie keeps the lane.
pub fn sv_decide_from_payoffs(
    payoffs: &PayoffMatrix,
    dist: &FvTypeDistribution,
) -> LaneChangeDecision {
    let mut expected = [0.0f64; 2];
    let mut responses = [[FvAction::ConstantSpeed; 3]; 2];
    for sv in SV_ACTIONS {
        let si = sv_index(sv);
        for t in FV_TYPES {
            let ti = type_index(t);
            let mut best = FV_ACTIONS[0];
            let mut best_cost = payoffs.at(t, sv, best).fv;
            for fv in FV_ACTIONS.into_iter().skip(1) {
                let c = payoffs.at(t, sv, fv).fv;
                if c < best_cost {
                    best = fv;
                    best_cost = c;
                }
            }
            responses[si][ti] = best;
            expected[si] += dist.prob(t) * payoffs.at(t, sv, best).sv;
        }
    }
    let change = sv_index(SvAction::ChangeLane);
    let keep = sv_index(SvAction::KeepFollowing);
    let action =
        if expected[change] < expected[keep] { SvAction::ChangeLane } else { SvAction::KeepFollowing };
    LaneChangeDecision {
        action,
        responses: responses[sv_index(action)],
        expected_change: expected[change],
        expected_keep: expected[keep],
    }
}

/// Full pipeline: rollout payoffs, then the bilevel argmin.
pub fn sv_decide(
    scene: &LocalScene,
    dist: &FvTypeDistribution,
    cfg: &GameConfig,
) -> Result<LaneChangeDecision, GameError> {
    dist.validate()?;
    Ok(sv_decide_from_payoffs(&build_payoffs(scene, cfg), dist))
}

/// A mixed strategy profile over the style-expected bimatrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedOutcome {
    /// Probability of each leader action, indexed like [`SV_ACTIONS`].
    pub sv_probs: [f64; 2],
    /// Probability of each follower action, indexed like [`FV_ACTIONS`].
    pub fv_probs: [f64; 4],
}

impl MixedOutcome {
    /// Deterministic reading of the mixed profile: the likeliest leader
    /// action, keeping the lane on a tie.
    pub fn sv_action(&self) -> SvAction {
        if self.sv_probs[0] > self.sv_probs[1] {
            SvAction::ChangeLane
        } else {
            SvAction::KeepFollowing
        }
    }
}

/// Equilibrium solver over the same tensor, usable in place of
/// [`sv_decide_from_payoffs`]: styles are averaged out first, then pure
/// equilibria are scanned, then 2x2 supports are enumerated. Finite games of
/// this shape always yield one of the two.
pub fn mixed_equilibrium(payoffs: &PayoffMatrix, dist: &FvTypeDistribution) -> MixedOutcome {
    let mut sv_cost = [[0.0f64; 4]; 2];
    let mut fv_cost = [[0.0f64; 4]; 2];
    for t in FV_TYPES {
        for sv in SV_ACTIONS {
            for fv in FV_ACTIONS {
                let pair = payoffs.at(t, sv, fv);
                sv_cost[sv_index(sv)][fv_index(fv)] += dist.prob(t) * pair.sv;
                fv_cost[sv_index(sv)][fv_index(fv)] += dist.prob(t) * pair.fv;
            }
        }
    }
    // Pure equilibria.
    for i in 0..2 {
        for j in 0..4 {
            let sv_ok = sv_cost[i][j] <= sv_cost[1 - i][j];
            let fv_ok = (0..4).all(|k| fv_cost[i][j] <= fv_cost[i][k]);
            if sv_ok && fv_ok {
                let mut out = MixedOutcome { sv_probs: [0.0; 2], fv_probs: [0.0; 4] };
                out.sv_probs[i] = 1.0;
                out.fv_probs[j] = 1.0;
                return out;
            }
        }
    }
    // Mixed over 2x2 supports: leader mixes p on action 0; follower mixes q
    // on the support pair (j, k).
    for j in 0..4 {
        for k in (j + 1)..4 {
            let denom = fv_cost[0][j] - fv_cost[0][k] - fv_cost[1][j] + fv_cost[1][k];
            if denom.abs() < 1e-12 {
                continue;
            }
            let p = (fv_cost[1][k] - fv_cost[1][j]) / denom;
            if !(0.0..=1.0).contains(&p) {
                continue;
            }
            let support_cost =
                |a: usize| p * fv_cost[0][a] + (1.0 - p) * fv_cost[1][a];
            let eq_cost = support_cost(j);
            if (0..4).any(|a| support_cost(a) < eq_cost - 1e-9) {
                continue;
            }
            let denom_q = sv_cost[0][j] - sv_cost[1][j] - sv_cost[0][k] + sv_cost[1][k];
            if denom_q.abs() < 1e-12 {
                continue;
            }
            let q = (sv_cost[1][k] - sv_cost[0][k]) / denom_q;
            if !(0.0..=1.0).contains(&q) {
                continue;
            }
            let mut out = MixedOutcome { sv_probs: [p, 1.0 - p], fv_probs: [0.0; 4] };
            out.fv_probs[j] = q;
            out.fv_probs[k] = 1.0 - q;
            return out;
        }
    }
    // Degenerate tensors (for example all-equal payoffs) fall back to the
    // leader-follower reading.
    let d = sv_decide_from_payoffs(payoffs, dist);
    let mut out = MixedOutcome { sv_probs: [0.0; 2], fv_probs: [0.0; 4] };
    out.sv_probs[sv_index(d.action)] = 1.0;
    out.fv_probs[fv_index(d.responses[1])] = 1.0;
    out
}
