//! The frozen planning scene: a snapshot of the world at a planning instant,
//! role assignment around the projected merge conflict, and candidate
//! scoring by closed-loop rollout. Rollouts reuse the real step dynamics, so
//! a plan is judged by what the traffic would actually do with it.

use std::cell::OnceCell;

use thiserror::Error;

use crate::collision::{classify_merge_gap, MergeGapClass};
use crate::config::SimConfig;
use crate::objectives::{
    u_eff, u_fuel, u_safe, FuelModelParams, ObjectiveVector, SafetyParams,
};
use crate::optimizer::{
    DecisionSpace, DecisionVector, GapChoice, MergePlan, PlanArtifacts, PlanEvaluator, VmcMode,
};
use crate::planning::{
    plan_lateral_vmc, plan_longitudinal_vr, AccelLimits, CubicMotion, KinState, TransitionBlend,
};
use crate::traffic::{TrajPoint, Trajectory};

use super::scenario::equilibrium_gap;
use super::world::{Lane, Role, Vehicle, VehicleId, VehicleKind, VirtualLeader, VirtualTarget, World};

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("no ramp vehicle in the world")]
    NoRampVehicle,
    #[error("the ramp vehicle has already merged")]
    AlreadyMerged,
    #[error("the ramp vehicle is mid-maneuver")]
    MidManeuver,
}

/// Scene participants around the projected conflict. All are optional:
/// sparse traffic can leave any slot neighbor absent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SceneRoles {
    /// Cooperating vehicle: first main-lane arrival after the ramp vehicle.
    pub vmc: Option<VehicleId>,
    /// Main-lane vehicle arriving just ahead of the ramp vehicle.
    pub vmf: Option<VehicleId>,
    /// Main-lane vehicle behind the cooperating one.
    pub vmr: Option<VehicleId>,
    /// Far-lane vehicle ahead of the cooperating one.
    pub vnf: Option<VehicleId>,
    /// Far-lane vehicle behind the cooperating one.
    pub vnr: Option<VehicleId>,
}

/// Orders the merge conflict by projected arrival at the merge reference
/// point: the cooperating vehicle is the first main-lane vehicle that would
/// get there after the ramp vehicle. The ramp vehicle is projected at the
/// mean of its own and the main-lane average speed, since it speeds up on
/// the way in.
pub fn assign_roles(w: &World, vr_id: VehicleId) -> SceneRoles {
    let vr = w.vehicle(vr_id);
    let ref_x = w.road.merge_ref_x;
    let arrival = |x: f64, v: f64| (ref_x - x) / v.max(1.0);

    let mut lane1: Vec<&Vehicle> =
        w.vehicles.iter().filter(|v| v.id != vr_id && v.lane == Lane::Main1).collect();
    lane1.sort_by(|a, b| b.x.partial_cmp(&a.x).unwrap());
    let mean_v1 = if lane1.is_empty() {
        vr.v
    } else {
        lane1.iter().map(|v| v.v).sum::<f64>() / lane1.len() as f64
    };
    let t_vr = arrival(vr.x, 0.5 * (vr.v + mean_v1));

    let mut roles = SceneRoles::default();
    // Front-to-back in x is earliest-to-latest arrival for near-uniform
    // speeds; scan for the first vehicle arriving after the ramp vehicle.
    let split = lane1
        .iter()
        .position(|v| arrival(v.x, v.v) > t_vr)
        .unwrap_or(lane1.len());
    if split > 0 {
        roles.vmf = Some(lane1[split - 1].id);
    }
    if split < lane1.len() {
        roles.vmc = Some(lane1[split].id);
        if split + 1 < lane1.len() {
            roles.vmr = Some(lane1[split + 1].id);
        }
        let anchor_x = lane1[split].x;
        let mut best_ahead: Option<&Vehicle> = None;
        let mut best_behind: Option<&Vehicle> = None;
        for v in w.vehicles.iter().filter(|v| v.lane == Lane::Main2) {
            if v.x >= anchor_x {
                if best_ahead.map_or(true, |b| v.x < b.x) {
                    best_ahead = Some(v);
                }
            } else if best_behind.map_or(true, |b| v.x > b.x) {
                best_behind = Some(v);
            }
        }
        roles.vnf = best_ahead.map(|v| v.id);
        roles.vnr = best_behind.map(|v| v.id);
    }
    roles
}

/// Writes the role assignment onto the vehicles, clearing stale marks.
pub fn apply_roles(w: &mut World, vr_id: VehicleId, roles: &SceneRoles) {
    for v in &mut w.vehicles {
        if v.id != vr_id {
            v.role = Role::Background;
        }
    }
    let mut set = |id: Option<VehicleId>, role: Role| {
        if let Some(id) = id {
            w.vehicle_mut(id).role = role;
        }
    };
    set(roles.vmc, Role::Vmc);
    set(roles.vmf, Role::Vmf);
    set(roles.vmr, Role::Vmr);
    set(roles.vnf, Role::Vnf);
    set(roles.vnr, Role::Vnr);
}

/// Distance a follower ends up behind its leader once settled: equilibrium
/// gap plus the center-to-center body allowance. Near the desired speed the
/// equilibrium diverges, so it is capped; the rollout scores the actual
/// landing either way.
fn follow_offset(veh: &Vehicle, v: f64) -> f64 {
    let p = veh.idm();
    let cap = 3.0 * p.desired_gap(v, 0.0);
    let gap = equilibrium_gap(p, v).unwrap_or(cap).min(cap);
    gap + veh.length
}

/// Per-vehicle state series recorded during a rollout.
struct Series {
    id: VehicleId,
    length: f64,
    width: f64,
    points: Vec<TrajPoint>,
}

impl Series {
    fn sample(&mut self, t: f64, v: &Vehicle) {
        let heading = match &v.lane_change {
            Some(lc) => lc.poly.slope_at(v.x).atan(),
            None => 0.0,
        };
        self.points.push(TrajPoint { t, x: v.x, y: v.y, v: v.v, a: v.a, heading });
    }

    fn mean_accel_until(&self, t_end: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for p in &self.points {
            if p.t > t_end + 1e-9 {
                break;
            }
            sum += p.a;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    fn trajectory_until(&self, dt: f64, t_end: f64) -> Trajectory {
        let points: Vec<TrajPoint> =
            self.points.iter().take_while(|p| p.t <= t_end + 1e-9).copied().collect();
        Trajectory { dt, points, truncated: false }
    }

    fn at_time(&self, t: f64) -> Option<&TrajPoint> {
        self.points.iter().min_by(|a, b| {
            (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()
        })
    }
}

struct Rollout {
    world: World,
    series: Vec<Series>,
}

impl Rollout {
    fn series_of(&self, id: VehicleId) -> &Series {
        self.series.iter().find(|s| s.id == id).expect("vehicle recorded")
    }
}

/// Scheduled lane changes executed inside a rollout once their window opens
/// and the vehicle is actually in position.
struct PendingLc {
    id: VehicleId,
    to: Lane,
    not_before: f64,
    duration: f64,
    /// Merging moves must start inside the acceleration lane with enough
    /// runway left to finish; lane-to-lane moves only need a free vehicle.
    require_merge_window: bool,
}

/// Frozen state of one planning episode.
pub struct MergeScene {
    world: World,
    pub t0: f64,
    pub vr: VehicleId,
    pub roles: SceneRoles,
    planner: crate::config::PlannerConfig,
    safety: SafetyParams,
    fuel: FuelModelParams,
    politeness: f64,
    baseline: OnceCell<Rollout>,
}

impl MergeScene {
    pub fn freeze(world: &World, cfg: &SimConfig) -> Result<Self, SceneError> {
        let vr = world.find_role(Role::Vr).ok_or(SceneError::NoRampVehicle)?;
        if vr.merged_at.is_some() {
            return Err(SceneError::AlreadyMerged);
        }
        if vr.lane_change.is_some() {
            return Err(SceneError::MidManeuver);
        }
        let vr_id = vr.id;
        let mut frozen = world.clone();
        // A fresh plan replaces whatever guidance was active.
        for v in &mut frozen.vehicles {
            v.virtual_leader = None;
        }
        let roles = assign_roles(&frozen, vr_id);
        Ok(Self {
            world: frozen,
            t0: world.time,
            vr: vr_id,
            roles,
            planner: cfg.planner,
            safety: cfg.safety,
            fuel: cfg.fuel,
            politeness: cfg.game.rules.politeness,
            baseline: OnceCell::new(),
        })
    }

    fn veh(&self, id: VehicleId) -> &Vehicle {
        self.world.vehicle(id)
    }

    fn vmc_is_cav(&self) -> bool {
        self.roles.vmc.map_or(false, |id| self.veh(id).kind() == VehicleKind::Cav)
    }

    /// Current far-lane slot the cooperating vehicle would move into.
    fn lateral_room(&self) -> bool {
        let Some(vmc) = self.roles.vmc.map(|id| self.veh(id)) else { return false };
        let front = self.roles.vnf.map(|id| self.veh(id));
        let rear = self.roles.vnr.map(|id| self.veh(id));
        let front_bound = front.map_or(f64::INFINITY, |v| v.x - 0.5 * v.length);
        let rear_bound = rear.map_or(f64::NEG_INFINITY, |v| v.x + 0.5 * v.length);
        front_bound - rear_bound >= vmc.length + 2.0 * vmc.idm().min_gap
    }

    pub fn decision_space(&self) -> DecisionSpace {
        DecisionSpace {
            t_min: self.planner.horizon_min,
            t_max: self.planner.horizon_max,
            time_grid: self.planner.time_grid,
            behind_allowed: self.planner.behind_allowed && self.roles.vmc.is_some(),
            longitudinal_allowed: self.vmc_is_cav(),
            lateral_allowed: self.vmc_is_cav() && self.lateral_room(),
        }
    }

    /// Slot bounds (lead, rear) implied by a decision. Lateral cooperation
    /// vacates the cooperating vehicle, leaving its whole gap.
    fn slot_bounds(&self, d: &DecisionVector) -> (Option<VehicleId>, Option<VehicleId>) {
        match (d.vmc_mode, d.gap) {
            (VmcMode::Lateral, _) => (self.roles.vmf, self.roles.vmr),
            (_, GapChoice::AheadOfVmc) => (self.roles.vmf, self.roles.vmc),
            (_, GapChoice::BehindVmc) => (self.roles.vmc, self.roles.vmr),
        }
    }

    fn limits(&self) -> AccelLimits {
        AccelLimits { max_accel: self.planner.max_accel, max_decel: self.planner.max_decel }
    }

    /// The undisturbed world: nobody merges, nobody is guided; the ramp
    /// vehicle ghosts past the lane end so main traffic stays untouched.
    fn baseline(&self) -> &Rollout {
        self.baseline.get_or_init(|| {
            let mut w = self.world.clone();
            w.stop_at_ramp_end = false;
            let end = self.t0 + self.planner.horizon_max + self.planner.settle + 1.0;
            run_rollout(w, end, &[])
        })
    }

    fn infeasible(&self, decision: &DecisionVector) -> MergePlan {
        MergePlan { decision: *decision, objectives: ObjectiveVector::infeasible(), artifacts: None }
    }

    /// Builds the ramp vehicle's guidance: a screened cubic from the slot
    /// lead's current state (guarded ahead of the ramp vehicle) to the
    /// mid-slot landing at the slot speed, offset by the follow distance.
    fn build_vr_guide(
        &self,
        lead: Option<&Vehicle>,
        rear: Option<&Vehicle>,
        tf_rel: f64,
    ) -> Result<(CubicMotion, f64), crate::planning::PlanningError> {
        let vr = self.veh(self.vr);
        let target_v = lead.map(|v| v.v).or_else(|| rear.map(|v| v.v)).unwrap_or(vr.v);
        let front_bound = lead.map(|v| v.x + v.v * tf_rel - 0.5 * v.length);
        let rear_bound = rear.map(|v| v.x + v.v * tf_rel + 0.5 * v.length);
        let landing = match (front_bound, rear_bound) {
            (Some(f), Some(r)) => 0.5 * (f + r),
            (Some(f), None) => f - follow_offset(vr, target_v),
            (None, Some(r)) => r + follow_offset(vr, target_v) + vr.length,
            (None, None) => vr.x + vr.v * tf_rel,
        };
        let clearance = vr.idm().min_gap + vr.length;
        let entry = match lead {
            Some(l) => KinState { x: l.x.max(vr.x + clearance), v: l.v },
            None => KinState { x: vr.x + follow_offset(vr, vr.v), v: vr.v },
        };
        let exit = KinState { x: landing + follow_offset(vr, target_v), v: target_v };
        let guide =
            plan_longitudinal_vr(entry, exit, self.t0, self.t0 + tf_rel, self.limits())?;
        Ok((guide, target_v))
    }

    /// Longitudinal cooperation: the cooperating vehicle is eased back until
    /// the slot ahead of it can hold the ramp vehicle with full following
    /// margins on both sides.
    fn build_vmc_longitudinal(
        &self,
        tf_rel: f64,
    ) -> Option<Result<CubicMotion, crate::planning::PlanningError>> {
        let vmc = self.veh(self.roles.vmc?);
        let vr = self.veh(self.vr);
        let lead = self.roles.vmf.map(|id| self.veh(id));
        let target_v = lead.map_or(vmc.v, |v| v.v);
        let front_bound = match lead {
            Some(l) => l.x + l.v * tf_rel - 0.5 * l.length,
            // No front neighbor: hold the current gap shape around the
            // projected position.
            None => vmc.x + vmc.v * tf_rel + 2.0 * vmc.idm().desired_gap(target_v, 0.0),
        };
        let needed = vr.idm().desired_gap(target_v, 0.0)
            + vr.length
            + vmc.idm().desired_gap(target_v, 0.0);
        let target_center = front_bound - needed - 0.5 * vmc.length;
        let entry = match lead {
            Some(l) => KinState { x: l.x.max(vmc.x + vmc.idm().min_gap + vmc.length), v: l.v },
            None => KinState { x: vmc.x + follow_offset(vmc, vmc.v), v: vmc.v },
        };
        let exit = KinState { x: target_center + follow_offset(vmc, target_v), v: target_v };
        Some(plan_longitudinal_vr(entry, exit, self.t0, self.t0 + tf_rel, self.limits()))
    }

    /// Lateral cooperation: the cooperating vehicle is guided into the
    /// far-lane slot center while it changes lanes.
    fn build_vmc_lateral(
        &self,
        tf_rel: f64,
    ) -> Option<Result<CubicMotion, crate::planning::PlanningError>> {
        let vmc = self.veh(self.roles.vmc?);
        let vnf = self.roles.vnf.map(|id| self.veh(id));
        let vnr = self.roles.vnr.map(|id| self.veh(id));
        let target_v = vnf.map(|v| v.v).or_else(|| vnr.map(|v| v.v)).unwrap_or(vmc.v);
        let front_bound = vnf.map(|v| v.x + v.v * tf_rel - 0.5 * v.length);
        let rear_bound = vnr.map(|v| v.x + v.v * tf_rel + 0.5 * v.length);
        let landing = match (front_bound, rear_bound) {
            (Some(f), Some(r)) => 0.5 * (f + r),
            (Some(f), None) => f - follow_offset(vmc, target_v),
            (None, Some(r)) => r + follow_offset(vmc, target_v) + vmc.length,
            (None, None) => vmc.x + vmc.v * tf_rel,
        };
        let entry = match vnf {
            Some(l) => KinState { x: l.x.max(vmc.x + vmc.idm().min_gap + vmc.length), v: l.v },
            None => KinState { x: vmc.x + follow_offset(vmc, vmc.v), v: vmc.v },
        };
        let exit = KinState { x: landing + follow_offset(vmc, target_v), v: target_v };
        Some(plan_lateral_vmc(entry, exit, self.t0, self.t0 + tf_rel, self.limits()))
    }
}

/// Steps a prepared world to `t_end`, firing pending lane changes when their
/// window and position conditions are met, recording every vehicle.
fn run_rollout(mut w: World, t_end: f64, pending: &[PendingLc]) -> Rollout {
    let mut series: Vec<Series> = w
        .vehicles
        .iter()
        .map(|v| Series { id: v.id, length: v.length, width: v.width, points: Vec::new() })
        .collect();
    let mut fired = vec![false; pending.len()];
    for (s, v) in series.iter_mut().zip(&w.vehicles) {
        s.sample(w.time, v);
    }
    while w.time < t_end - 1e-9 {
        for (k, lc) in pending.iter().enumerate() {
            if fired[k] || w.time + 1e-9 < lc.not_before {
                continue;
            }
            let veh = w.vehicle(lc.id);
            if veh.lane_change.is_some() || veh.lane == lc.to || veh.stopped_at.is_some() {
                continue;
            }
            if lc.require_merge_window {
                let (start, end) = w.road.merge_window();
                let runway = veh.x + (veh.v * lc.duration).max(1.0);
                if veh.x < start || runway > end {
                    continue;
                }
            }
            w.start_lane_change(lc.id, lc.to, lc.duration);
            fired[k] = true;
        }
        let alive = w.step();
        for (s, v) in series.iter_mut().zip(&w.vehicles) {
            s.sample(w.time, v);
        }
        if !alive {
            break;
        }
    }
    Rollout { world: w, series }
}

impl PlanEvaluator for MergeScene {
    fn evaluate(&self, decision: &DecisionVector) -> MergePlan {
        let tf_rel = decision.merge_end_time;
        let tf_abs = self.t0 + tf_rel;
        let lc_dur = self.planner.lc_duration;
        if tf_rel < lc_dur + 1.0 {
            return self.infeasible(decision);
        }
        let (lead_id, rear_id) = self.slot_bounds(decision);
        let lead = lead_id.map(|id| self.veh(id));
        let rear = rear_id.map(|id| self.veh(id));

        let Ok((vr_guide, _)) = self.build_vr_guide(lead, rear, tf_rel) else {
            return self.infeasible(decision);
        };
        let vmc_guide = match decision.vmc_mode {
            VmcMode::NoCooperation => None,
            VmcMode::Longitudinal => match self.build_vmc_longitudinal(tf_rel) {
                Some(Ok(g)) => Some(g),
                Some(Err(_)) => return self.infeasible(decision),
                None => return self.infeasible(decision),
            },
            VmcMode::Lateral => match self.build_vmc_lateral(tf_rel) {
                Some(Ok(g)) => Some(g),
                Some(Err(_)) => return self.infeasible(decision),
                None => return self.infeasible(decision),
            },
        };

        // Candidate world: install guidance and schedule the maneuvers.
        let mut w = self.world.clone();
        let blend_end = self.t0 + self.planner.blend_duration;
        let vr_veh = w.vehicle_mut(self.vr);
        vr_veh.virtual_leader = Some(VirtualLeader {
            target: VirtualTarget::Planned(vr_guide),
            blend: TransitionBlend::from_window(self.t0, blend_end).expect("positive blend window"),
            expires: tf_abs,
            length: vr_veh.length,
        });
        let mut pending = vec![PendingLc {
            id: self.vr,
            to: Lane::Main1,
            not_before: tf_abs - lc_dur,
            duration: lc_dur,
            require_merge_window: true,
        }];
        if let Some(guide) = vmc_guide {
            let vmc_id = self.roles.vmc.expect("cooperation implies a cooperating vehicle");
            let vmc_veh = w.vehicle_mut(vmc_id);
            vmc_veh.virtual_leader = Some(VirtualLeader {
                target: VirtualTarget::Planned(guide),
                blend: TransitionBlend::from_window(self.t0, blend_end)
                    .expect("positive blend window"),
                expires: tf_abs,
                length: vmc_veh.length,
            });
            if decision.vmc_mode == VmcMode::Lateral {
                pending.push(PendingLc {
                    id: vmc_id,
                    to: Lane::Main2,
                    not_before: self.t0 + self.planner.blend_duration,
                    duration: lc_dur,
                    require_merge_window: false,
                });
            }
        }

        let settle_end = tf_abs + self.planner.settle;
        let rollout = run_rollout(w, settle_end, &pending);

        let vr_end = rollout.world.vehicle(self.vr);
        if rollout.world.collided || vr_end.stopped_at.is_some() {
            return self.infeasible(decision);
        }
        let Some(merged_at) = vr_end.merged_at else {
            return self.infeasible(decision);
        };
        if merged_at > tf_abs + 1.0 {
            return self.infeasible(decision);
        }
        // The merge must land in the slot the decision named.
        let in_slot = {
            let lead_ok = lead_id
                .map_or(true, |id| rollout.world.vehicle(id).x > vr_end.x);
            let rear_ok = rear_id
                .map_or(true, |id| rollout.world.vehicle(id).x < vr_end.x);
            lead_ok && rear_ok
        };
        if !in_slot {
            return self.infeasible(decision);
        }
        if decision.vmc_mode == VmcMode::Lateral {
            let vmc_id = self.roles.vmc.expect("lateral implies a cooperating vehicle");
            if rollout.world.vehicle(vmc_id).lane != Lane::Main2 {
                return self.infeasible(decision);
            }
        }

        // Safety is judged on the rear-end pair the merge creates: the ramp
        // vehicle in front, its new follower behind, at the completion step.
        let dt = self.world.dt;
        let safety = match rear_id {
            None => Ok(0.0),
            Some(rear) => {
                let rear_s = rollout.series_of(rear);
                let rp = rear_s.at_time(merged_at).expect("rollout recorded");
                let vr_s = rollout.series_of(self.vr);
                let vp = vr_s.at_time(merged_at).expect("rollout recorded");
                let d_cri = vp.x - 0.5 * vr_s.length - (rp.x + 0.5 * rear_s.length);
                u_safe(d_cri, rp.v, vp.v, &self.safety)
            }
        };
        let Ok(safe) = safety else {
            return self.infeasible(decision);
        };

        // Fuel counts both principals whatever the cooperation mode, so
        // modes compete on how the maneuver is driven, not on head count.
        let vr_traj = rollout.series_of(self.vr).trajectory_until(dt, tf_abs);
        let vmc_traj =
            self.roles.vmc.map(|id| rollout.series_of(id).trajectory_until(dt, tf_abs));
        let fuel = u_fuel(&vr_traj, vmc_traj.as_ref(), &self.fuel);

        let baseline = self.baseline();
        let mut affected = vec![self.vr];
        for id in [self.roles.vmc, self.roles.vmr] {
            if let Some(id) = id {
                affected.push(id);
            }
        }
        if decision.vmc_mode == VmcMode::Lateral {
            if let Some(id) = self.roles.vnr {
                affected.push(id);
            }
        }
        let before: Vec<f64> = affected
            .iter()
            .map(|&id| baseline.series_of(id).mean_accel_until(settle_end))
            .collect();
        let after: Vec<f64> = affected
            .iter()
            .map(|&id| rollout.series_of(id).mean_accel_until(settle_end))
            .collect();
        let eff = u_eff(&before, &after, self.politeness);

        let gap_class = {
            let vr_s = rollout.series_of(self.vr);
            let vr_dims = (vr_s.length, vr_s.width);
            let vr_t = vr_s.trajectory_until(dt, settle_end);
            let pack = |id: Option<VehicleId>| {
                id.map(|id| {
                    let s = rollout.series_of(id);
                    (s.trajectory_until(dt, settle_end), (s.length, s.width))
                })
            };
            let vmc_pack = pack(self.roles.vmc);
            let vmr_pack = pack(self.roles.vmr);
            classify_merge_gap(
                &vr_t,
                vr_dims,
                vmc_pack.as_ref().map(|(t, d)| (t, *d)),
                vmr_pack.as_ref().map(|(t, d)| (t, *d)),
            )
            .unwrap_or(MergeGapClass::Infeasible)
        };

        MergePlan {
            decision: *decision,
            objectives: ObjectiveVector { u_safe: safe, u_fuel: fuel, u_eff: eff, feasible: true },
            artifacts: Some(PlanArtifacts {
                vr_guide,
                vmc_guide,
                vr_lc_window: (tf_abs - lc_dur, tf_abs),
                vmc_lc_window: (decision.vmc_mode == VmcMode::Lateral)
                    .then(|| (self.t0 + self.planner.blend_duration, tf_abs)),
                gap_class,
            }),
        }
    }
}
