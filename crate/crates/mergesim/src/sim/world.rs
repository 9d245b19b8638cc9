//! The stepped traffic world: lanes, vehicles, and the update rule.
//!
//! One step reads every acceleration from the frozen previous state, then
//! integrates speeds and positions semi-implicitly (speed first, position
//! from the new speed). Lateral motion follows each vehicle's active
//! lane-change polynomial as a function of its longitudinal position.
//! Controllers act between steps by mutating vehicles (assigning virtual
//! leaders, starting lane changes); the world itself contains no decision
//! logic beyond car-following and the hard stop at the ramp end.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collision::VehicleFootprint;
use crate::config::{HdvConfig, RoadConfig};
use crate::planning::{CubicMotion, TransitionBlend};
use crate::traffic::{
    cav_accel, fit_quintic, hdv_accel, idm_accel, CavParams, HdvParams, HistorySample,
    LaneChangePoly, StateHistory,
};

pub type VehicleId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Ramp,
    Main1,
    Main2,
}

impl Lane {
    pub fn label(self) -> &'static str {
        match self {
            Lane::Ramp => "ramp",
            Lane::Main1 => "main1",
            Lane::Main2 => "main2",
        }
    }
}

/// Lane geometry in a flat frame: the rightmost main lane runs along y = 0,
/// the far main lane one width above, the ramp one width below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadGeometry {
    pub lane_width: f64,
    pub accel_lane_start: f64,
    pub accel_lane_end: f64,
    pub merge_ref_x: f64,
}

impl RoadGeometry {
    pub fn from_config(cfg: &RoadConfig) -> Self {
        Self {
            lane_width: cfg.lane_width,
            accel_lane_start: cfg.accel_lane_start,
            accel_lane_end: cfg.accel_lane_end,
            merge_ref_x: cfg.merge_ref_x,
        }
    }

    pub fn centerline(&self, lane: Lane) -> f64 {
        match lane {
            Lane::Main1 => 0.0,
            Lane::Main2 => self.lane_width,
            Lane::Ramp => -self.lane_width,
        }
    }

    /// Longitudinal interval where ramp traffic may cross into the main road.
    pub fn merge_window(&self) -> (f64, f64) {
        (self.accel_lane_start, self.accel_lane_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Hdv,
    Cav,
}

impl VehicleKind {
    pub fn label(self) -> &'static str {
        match self {
            VehicleKind::Hdv => "hdv",
            VehicleKind::Cav => "cav",
        }
    }
}

/// Named parts in the merge scene; everything else is background traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The merging ramp vehicle.
    Vr,
    /// The cooperating main-road vehicle the slot is defined against.
    Vmc,
    /// Main-road vehicle ahead of the cooperating one.
    Vmf,
    /// Main-road vehicle behind the cooperating one.
    Vmr,
    /// Far-lane vehicle ahead of the cooperating one.
    Vnf,
    /// Far-lane vehicle behind the cooperating one.
    Vnr,
    Background,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Vr => "vr",
            Role::Vmc => "vmc",
            Role::Vmf => "vmf",
            Role::Vmr => "vmr",
            Role::Vnf => "vnf",
            Role::Vnr => "vnr",
            Role::Background => "bg",
        }
    }

    pub fn is_key(self) -> bool {
        !matches!(self, Role::Background)
    }
}

/// Kind-specific longitudinal model state.
#[derive(Debug, Clone)]
pub enum Dynamics {
    Cav(CavParams),
    Hdv { params: HdvParams, history: StateHistory, last_leader: Option<VehicleId> },
}

impl Dynamics {
    pub fn idm(&self) -> &crate::traffic::IdmParams {
        match self {
            Dynamics::Cav(p) => &p.idm,
            Dynamics::Hdv { params, .. } => &params.idm,
        }
    }

    pub fn kind(&self) -> VehicleKind {
        match self {
            Dynamics::Cav(_) => VehicleKind::Cav,
            Dynamics::Hdv { .. } => VehicleKind::Hdv,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActiveLaneChange {
    pub poly: LaneChangePoly,
    pub from: Lane,
    pub to: Lane,
    pub started_at: f64,
}

/// What a guided vehicle follows in place of (or ahead of) physical traffic.
#[derive(Debug, Clone)]
pub enum VirtualTarget {
    /// A planned guidance trajectory.
    Planned(CubicMotion),
    /// Another vehicle's live state, followed as if it shared the lane.
    Tracked(VehicleId),
}

#[derive(Debug, Clone)]
pub struct VirtualLeader {
    pub target: VirtualTarget,
    pub blend: TransitionBlend,
    /// Guidance is dropped after this time; infinity keeps it until cleared.
    pub expires: f64,
    /// Virtual body length used in gap computation (m).
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: VehicleId,
    pub role: Role,
    pub lane: Lane,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    pub length: f64,
    pub width: f64,
    pub dynamics: Dynamics,
    pub lane_change: Option<ActiveLaneChange>,
    pub virtual_leader: Option<VirtualLeader>,
    pub merged_at: Option<f64>,
    pub stopped_at: Option<f64>,
    /// Discretionary changes are suppressed until this time (s).
    pub hold_lane_until: f64,
}

impl Vehicle {
    pub fn kind(&self) -> VehicleKind {
        self.dynamics.kind()
    }

    pub fn idm(&self) -> &crate::traffic::IdmParams {
        self.dynamics.idm()
    }

    /// Lanes whose traffic constrains this vehicle right now.
    pub fn occupied_lanes(&self) -> (Lane, Option<Lane>) {
        match &self.lane_change {
            Some(lc) => (lc.from, Some(lc.to)),
            None => (self.lane, None),
        }
    }

    pub fn occupies(&self, lane: Lane) -> bool {
        let (a, b) = self.occupied_lanes();
        a == lane || b == Some(lane)
    }

    pub fn footprint(&self) -> VehicleFootprint {
        let heading = match &self.lane_change {
            Some(lc) => lc.poly.slope_at(self.x).atan(),
            None => 0.0,
        };
        VehicleFootprint {
            x: self.x,
            y: self.y,
            heading,
            length: self.length,
            width: self.width,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    MergeCompleted { id: VehicleId, t: f64 },
    LaneChangeStarted { id: VehicleId, t: f64, from: Lane, to: Lane },
    LaneChangeCompleted { id: VehicleId, t: f64, lane: Lane },
    /// An unmerged ramp vehicle ran out of acceleration lane and stopped.
    ForcedStop { id: VehicleId, t: f64 },
    Collision { a: VehicleId, b: VehicleId, t: f64 },
    PlanAdopted { t: f64, gap: crate::optimizer::GapChoice, mode: crate::optimizer::VmcMode, end_time: f64 },
    PlanningFailed { t: f64 },
}

/// Per-vehicle reads taken before any state changes, so every acceleration
/// in a step sees the same snapshot.
struct Observation {
    leader_id: Option<VehicleId>,
    gap: f64,
    dspeed: f64,
    lead_accel: f64,
    /// Gap, closing speed, and acceleration of the virtual leader, if any.
    virt: Option<(f64, f64, f64)>,
    /// Bumper distance to the hard stop point at the ramp end.
    stop_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub road: RoadGeometry,
    pub dt: f64,
    pub time: f64,
    pub vehicles: Vec<Vehicle>,
    pub events: Vec<SimEvent>,
    pub collided: bool,
    /// Whether unmerged ramp traffic brakes for the acceleration-lane end.
    pub stop_at_ramp_end: bool,
    pub stop_margin: f64,
    hdv_cfg: HdvConfig,
    rng: ChaCha8Rng,
    next_resample: f64,
}

impl World {
    pub fn new(
        road: RoadGeometry,
        dt: f64,
        vehicles: Vec<Vehicle>,
        hdv_cfg: HdvConfig,
        stop_margin: f64,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            road,
            dt,
            time: 0.0,
            vehicles,
            events: Vec::new(),
            collided: false,
            stop_at_ramp_end: true,
            stop_margin,
            hdv_cfg,
            rng,
            next_resample: 0.0,
        }
    }

    pub fn vehicle(&self, id: VehicleId) -> &Vehicle {
        self.vehicles.iter().find(|v| v.id == id).expect("unknown vehicle id")
    }

    pub fn vehicle_mut(&mut self, id: VehicleId) -> &mut Vehicle {
        self.vehicles.iter_mut().find(|v| v.id == id).expect("unknown vehicle id")
    }

    pub fn find_role(&self, role: Role) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.role == role)
    }

    /// Index of the nearest vehicle ahead of `i` in `lane`, by center
    /// position, counting vehicles mid-change into that lane.
    pub fn leader_in_lane(&self, i: usize, lane: Lane) -> Option<usize> {
        let x = self.vehicles[i].x;
        let mut best: Option<usize> = None;
        for (j, other) in self.vehicles.iter().enumerate() {
            if j == i || !other.occupies(lane) || other.x <= x {
                continue;
            }
            if best.map_or(true, |b| other.x < self.vehicles[b].x) {
                best = Some(j);
            }
        }
        best
    }

    /// Nearest vehicle behind `i` in `lane`.
    pub fn follower_in_lane(&self, i: usize, lane: Lane) -> Option<usize> {
        let x = self.vehicles[i].x;
        let mut best: Option<usize> = None;
        for (j, other) in self.vehicles.iter().enumerate() {
            if j == i || !other.occupies(lane) || other.x >= x {
                continue;
            }
            if best.map_or(true, |b| other.x > self.vehicles[b].x) {
                best = Some(j);
            }
        }
        best
    }

    /// The most constraining physical leader across all occupied lanes.
    fn physical_leader(&self, i: usize) -> Option<usize> {
        let v = &self.vehicles[i];
        let (a, b) = v.occupied_lanes();
        let mut best = self.leader_in_lane(i, a);
        if let Some(lane_b) = b {
            let cand = self.leader_in_lane(i, lane_b);
            best = match (best, cand) {
                (Some(p), Some(q)) => {
                    Some(if self.vehicles[q].x < self.vehicles[p].x { q } else { p })
                }
                (p, q) => p.or(q),
            };
        }
        best
    }

    pub fn start_lane_change(&mut self, id: VehicleId, to: Lane, duration: f64) {
        let t = self.time;
        let road = self.road;
        let veh = self.vehicle_mut(id);
        debug_assert!(veh.lane_change.is_none(), "vehicle already changing lanes");
        let from = veh.lane;
        let span = (veh.v * duration).max(1.0);
        let offset = road.centerline(to) - road.centerline(from);
        let poly = fit_quintic(veh.x, veh.x + span, offset).expect("positive lane-change span");
        veh.lane_change = Some(ActiveLaneChange { poly, from, to, started_at: t });
        self.events.push(SimEvent::LaneChangeStarted { id, t, from, to });
    }

    fn observe(&self, i: usize) -> Observation {
        let veh = &self.vehicles[i];
        let (leader_id, gap, dspeed, lead_accel) = match self.physical_leader(i) {
            Some(j) => {
                let lead = &self.vehicles[j];
                (
                    Some(lead.id),
                    lead.x - veh.x - 0.5 * (lead.length + veh.length),
                    veh.v - lead.v,
                    lead.a,
                )
            }
            None => (None, f64::INFINITY, 0.0, 0.0),
        };
        let virt = veh.virtual_leader.as_ref().and_then(|vl| {
            if self.time > vl.expires {
                return None;
            }
            let (pos, speed, accel) = match &vl.target {
                VirtualTarget::Planned(m) => {
                    (m.position(self.time), m.speed(self.time), m.accel(self.time))
                }
                VirtualTarget::Tracked(id) => {
                    let tracked = self.vehicle(*id);
                    (tracked.x, tracked.v, tracked.a)
                }
            };
            Some((pos - veh.x - 0.5 * (vl.length + veh.length), veh.v - speed, accel))
        });
        let stop_gap = if self.stop_at_ramp_end
            && veh.lane == Lane::Ramp
            && veh.lane_change.is_none()
            && veh.merged_at.is_none()
        {
            let stop_x = self.road.accel_lane_end - self.stop_margin;
            Some(stop_x - veh.x - 0.5 * veh.length)
        } else {
            None
        };
        Observation { leader_id, gap, dspeed, lead_accel, virt, stop_gap }
    }

    /// Advances the world by one step. Returns false once a collision has
    /// been recorded; the state then stays frozen.
    pub fn step(&mut self) -> bool {
        if self.collided {
            return false;
        }
        let t = self.time;
        let dt = self.dt;
        let n = self.vehicles.len();

        // Human perception errors drift on their own clock.
        if self.hdv_cfg.error_jitter > 0.0 && t + 1e-9 >= self.next_resample {
            let j = self.hdv_cfg.error_jitter;
            for veh in &mut self.vehicles {
                if let Dynamics::Hdv { params, .. } = &mut veh.dynamics {
                    params.gap_error_factor = self.rng.gen_range(1.0 - j..=1.0 + j);
                    params.dspeed_error_factor = self.rng.gen_range(1.0 - j..=1.0 + j);
                }
            }
            self.next_resample += self.hdv_cfg.resample_period;
        }

        let observations: Vec<Observation> = (0..n).map(|i| self.observe(i)).collect();

        let mut accels = vec![0.0f64; n];
        for (i, obs) in observations.iter().enumerate() {
            let veh = &mut self.vehicles[i];
            let speed = veh.v;
            let a_phys = match &mut veh.dynamics {
                Dynamics::Cav(p) => {
                    if obs.gap.is_finite() {
                        cav_accel(p, obs.gap, speed, speed - obs.dspeed, obs.lead_accel)
                    } else {
                        idm_accel(&p.idm, f64::INFINITY, speed, 0.0)
                    }
                }
                Dynamics::Hdv { params, history, last_leader } => {
                    if *last_leader != obs.leader_id {
                        history.clear();
                        *last_leader = obs.leader_id;
                    }
                    if obs.leader_id.is_some() {
                        history.push(HistorySample {
                            t,
                            gap: obs.gap,
                            speed,
                            dspeed: obs.dspeed,
                        });
                        hdv_accel(params, history, t)
                    } else {
                        idm_accel(&params.idm, f64::INFINITY, speed, 0.0)
                    }
                }
            };
            let mut a = a_phys;
            if let Some((gap_v, dv_v, la_v)) = obs.virt {
                let a_virt = match &veh.dynamics {
                    Dynamics::Cav(p) => cav_accel(p, gap_v, speed, speed - dv_v, la_v),
                    Dynamics::Hdv { params, .. } => idm_accel(&params.idm, gap_v, speed, dv_v),
                };
                let vl = veh.virtual_leader.as_ref().expect("observed virtual leader");
                // Guidance may only add caution on top of physical traffic.
                a = a_phys.min(vl.blend.blended_accel(a_phys, a_virt, t));
            } else if veh.virtual_leader.as_ref().is_some_and(|vl| t > vl.expires) {
                veh.virtual_leader = None;
            }
            if let Some(stop_gap) = obs.stop_gap {
                a = a.min(idm_accel(veh.dynamics.idm(), stop_gap, speed, speed));
            }
            accels[i] = veh.dynamics.idm().clamp_accel(a);
        }

        let mut completions: Vec<(VehicleId, Lane, Lane)> = Vec::new();
        let mut forced_stops: Vec<VehicleId> = Vec::new();
        for (i, veh) in self.vehicles.iter_mut().enumerate() {
            veh.a = accels[i];
            veh.v = (veh.v + veh.a * dt).max(0.0);
            veh.x += veh.v * dt;
            if let Some(lc) = &veh.lane_change {
                let base = self.road.centerline(lc.from);
                veh.y = base + lc.poly.y_at(veh.x);
                let target = self.road.centerline(lc.to);
                if (veh.y - target).abs() < 0.05 {
                    veh.y = target;
                    let from = lc.from;
                    let to = lc.to;
                    veh.lane = to;
                    veh.lane_change = None;
                    completions.push((veh.id, from, to));
                }
            }
            if veh.lane == Lane::Ramp
                && veh.merged_at.is_none()
                && veh.stopped_at.is_none()
                && veh.v < 1e-3
                && veh.x > self.road.accel_lane_start
            {
                veh.stopped_at = Some(t + dt);
                forced_stops.push(veh.id);
            }
        }
        let t_next = t + dt;
        for (id, from, to) in completions {
            self.events.push(SimEvent::LaneChangeCompleted { id, t: t_next, lane: to });
            if from == Lane::Ramp && to == Lane::Main1 {
                self.vehicle_mut(id).merged_at = Some(t_next);
                self.events.push(SimEvent::MergeCompleted { id, t: t_next });
            }
        }
        for id in forced_stops {
            self.events.push(SimEvent::ForcedStop { id, t: t_next });
        }

        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&self.vehicles[i], &self.vehicles[j]);
                if (a.y - b.y).abs() > a.width + b.width {
                    continue;
                }
                if crate::collision::footprints_collide(&a.footprint(), &b.footprint()) {
                    self.events.push(SimEvent::Collision { a: a.id, b: b.id, t: t_next });
                    self.collided = true;
                }
            }
        }
        self.time = t_next;
        !self.collided
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{HdvConfig, RoadConfig};
    use crate::optimizer::derive_rng;
    use crate::planning::{solve_cubic_bvp, KinState};
    use crate::traffic::IdmParams;

    fn road() -> RoadGeometry {
        RoadGeometry::from_config(&RoadConfig::default())
    }

    fn cav(id: VehicleId, lane: Lane, x: f64, v: f64, road: &RoadGeometry) -> Vehicle {
        Vehicle {
            id,
            role: Role::Background,
            lane,
            x,
            y: road.centerline(lane),
            v,
            a: 0.0,
            length: 5.0,
            width: 2.0,
            dynamics: Dynamics::Cav(CavParams::default()),
            lane_change: None,
            virtual_leader: None,
            merged_at: None,
            stopped_at: None,
            hold_lane_until: 0.0,
        }
    }

    fn hdv(id: VehicleId, lane: Lane, x: f64, v: f64, road: &RoadGeometry) -> Vehicle {
        let params = HdvParams::default();
        let history = StateHistory::for_delays(params.max_delay(), 0.1);
        Vehicle {
            dynamics: Dynamics::Hdv { params, history, last_leader: None },
            ..cav(id, lane, x, v, road)
        }
    }

    fn world(vehicles: Vec<Vehicle>) -> World {
        World::new(road(), 0.1, vehicles, HdvConfig::default(), 5.0, derive_rng(7, 0))
    }

    #[test]
    fn equilibrium_platoon_stays_put() {
        let r = road();
        let p = IdmParams::default();
        let v = 20.0;
        let gap = p.desired_gap(v, 0.0) / (1.0 - (v / p.desired_speed).powi(4)).sqrt();
        let spacing = gap + 5.0;
        let mut vehicles: Vec<Vehicle> = (0..4)
            .map(|k| cav(k, Lane::Main1, -(k as f64) * spacing, v, &r))
            .collect();
        // Pace the platoon: the front vehicle cruises at exactly its desired
        // speed, so the followers' equilibrium gaps are stationary.
        vehicles[0].dynamics = Dynamics::Cav(CavParams {
            idm: IdmParams { desired_speed: v, ..p },
            ..CavParams::default()
        });
        let mut w = world(vehicles);
        for _ in 0..50 {
            assert!(w.step());
        }
        for veh in &w.vehicles {
            assert!(
                veh.a.abs() < 0.02,
                "equilibrium vehicle {} drifted to a = {}",
                veh.id,
                veh.a
            );
        }
    }

    #[test]
    fn follower_brakes_when_leader_slows() {
        let r = road();
        let mut lead = cav(0, Lane::Main1, 40.0, 10.0, &r);
        lead.dynamics = Dynamics::Cav(CavParams {
            idm: IdmParams { desired_speed: 10.0, ..IdmParams::default() },
            ..CavParams::default()
        });
        let tail = cav(1, Lane::Main1, 0.0, 25.0, &r);
        let mut w = world(vec![lead, tail]);
        for _ in 0..30 {
            w.step();
        }
        let tail = w.vehicle(1);
        assert!(tail.v < 25.0, "closing fast on a slow leader must brake");
        assert!(!w.collided);
    }

    #[test]
    fn hdv_reacts_later_than_cav() {
        // Same kinematics, leader brakes hard; the delayed driver holds its
        // speed longer than the automated one.
        let r = road();
        let run = |follower: Vehicle| {
            let mut lead = cav(0, Lane::Main1, 50.0, 20.0, &r);
            lead.dynamics = Dynamics::Cav(CavParams {
                idm: IdmParams { desired_speed: 5.0, ..IdmParams::default() },
                ..CavParams::default()
            });
            let mut w = world(vec![lead, follower]);
            for _ in 0..8 {
                w.step();
            }
            w.vehicle(1).a
        };
        let a_cav = run(cav(1, Lane::Main1, 0.0, 20.0, &r));
        let a_hdv = run(hdv(1, Lane::Main1, 0.0, 20.0, &r));
        assert!(
            a_hdv > a_cav + 0.01,
            "delayed driver still accelerates while automation already yields: {a_hdv} vs {a_cav}"
        );
    }

    #[test]
    fn lane_change_crosses_and_completes() {
        let r = road();
        let mut w = world(vec![cav(0, Lane::Main1, 0.0, 20.0, &r)]);
        w.start_lane_change(0, Lane::Main2, 4.0);
        let mut crossed_halfway = false;
        for _ in 0..45 {
            w.step();
            let veh = w.vehicle(0);
            if veh.y > 0.3 * r.lane_width && veh.y < 0.7 * r.lane_width {
                crossed_halfway = true;
            }
        }
        let veh = w.vehicle(0);
        assert!(crossed_halfway);
        assert_eq!(veh.lane, Lane::Main2);
        assert_eq!(veh.y, r.lane_width);
        assert!(veh.lane_change.is_none());
        assert!(w
            .events
            .iter()
            .any(|e| matches!(e, SimEvent::LaneChangeCompleted { id: 0, .. })));
    }

    #[test]
    fn ramp_vehicle_merging_emits_merge_event() {
        let r = road();
        let mut vr = cav(0, Lane::Ramp, 350.0, 20.0, &r);
        vr.role = Role::Vr;
        let mut w = world(vec![vr]);
        w.start_lane_change(0, Lane::Main1, 4.0);
        for _ in 0..60 {
            w.step();
        }
        let veh = w.vehicle(0);
        assert_eq!(veh.lane, Lane::Main1);
        assert!(veh.merged_at.is_some());
        assert!(w.events.iter().any(|e| matches!(e, SimEvent::MergeCompleted { id: 0, .. })));
    }

    #[test]
    fn unmerged_ramp_vehicle_stops_before_the_lane_ends() {
        let r = road();
        let mut w = world(vec![cav(0, Lane::Ramp, 400.0, 25.0, &r)]);
        for _ in 0..400 {
            w.step();
        }
        let veh = w.vehicle(0);
        assert!(veh.v < 1e-3, "must come to rest, v = {}", veh.v);
        assert!(
            veh.x + 0.5 * veh.length <= r.accel_lane_end - 5.0 + 0.5,
            "front bumper {} past the stop point",
            veh.x + 0.5 * veh.length
        );
        assert!(veh.stopped_at.is_some());
        assert!(w.events.iter().any(|e| matches!(e, SimEvent::ForcedStop { id: 0, .. })));
    }

    #[test]
    fn baseline_worlds_can_ignore_the_ramp_end() {
        let r = road();
        let mut w = world(vec![cav(0, Lane::Ramp, 400.0, 25.0, &r)]);
        w.stop_at_ramp_end = false;
        for _ in 0..400 {
            w.step();
        }
        assert!(w.vehicle(0).v > 20.0, "free ramp cruise must not brake");
    }

    #[test]
    fn planned_virtual_leader_pulls_vehicle_to_the_slot() {
        let r = road();
        let mut veh = cav(0, Lane::Ramp, 0.0, 18.0, &r);
        let idm = *veh.idm();
        // Guide toward x = 260 at 20 m/s by t = 15. A follower settles at
        // its car-following equilibrium behind the guide, so the guide ends
        // that far past the intended landing point.
        let target_x = 260.0;
        let target_v = 20.0;
        let eq_gap = idm.desired_gap(target_v, 0.0)
            / (1.0 - (target_v / idm.desired_speed).powi(4)).sqrt();
        let guide = solve_cubic_bvp(
            0.0,
            15.0,
            KinState { x: 60.0, v: 20.0 },
            KinState { x: target_x + eq_gap + 5.0, v: target_v },
        )
        .unwrap();
        veh.virtual_leader = Some(VirtualLeader {
            target: VirtualTarget::Planned(guide),
            blend: TransitionBlend::from_window(0.0, 2.0).unwrap(),
            expires: 25.0,
            length: 5.0,
        });
        let mut w = world(vec![veh]);
        w.stop_at_ramp_end = false;
        for _ in 0..250 {
            w.step();
        }
        let veh = w.vehicle(0);
        assert!(
            (veh.x - (target_x + target_v * 10.0)).abs() < 8.0,
            "guided vehicle should track the cruising slot, ended at {}",
            veh.x
        );
        assert!((veh.v - target_v).abs() < 0.6, "speed should settle near the slot speed");
    }

    #[test]
    fn tracked_virtual_leader_keeps_cross_lane_spacing() {
        let r = road();
        // Pace vehicle holds 22 m/s; the ramp follower starts far behind and
        // must close to the car-following equilibrium for that speed.
        let mut pred = cav(0, Lane::Main1, 80.0, 22.0, &r);
        pred.dynamics = Dynamics::Cav(CavParams {
            idm: IdmParams { desired_speed: 22.0, ..IdmParams::default() },
            ..CavParams::default()
        });
        let mut vr = cav(1, Lane::Ramp, -20.0, 22.0, &r);
        vr.virtual_leader = Some(VirtualLeader {
            target: VirtualTarget::Tracked(0),
            blend: TransitionBlend::from_window(0.0, 1.0).unwrap(),
            expires: f64::INFINITY,
            length: 5.0,
        });
        let mut w = world(vec![pred, vr]);
        w.stop_at_ramp_end = false;
        // Approach from above is asymptotic with a time constant around 25 s.
        for _ in 0..700 {
            w.step();
        }
        let pred = w.vehicle(0);
        let vr = w.vehicle(1);
        let gap = pred.x - vr.x - 5.0;
        let p = vr.idm();
        let eq_gap = p.desired_gap(22.0, 0.0) / (1.0 - (22.0 / p.desired_speed).powi(4)).sqrt();
        assert!(gap > 0.0, "follower must not overrun the tracked target");
        assert!(
            (gap - eq_gap).abs() < 0.10 * eq_gap,
            "cross-lane following should settle near equilibrium: {gap} vs {eq_gap}"
        );
    }

    #[test]
    fn touching_vehicles_collide_and_freeze_the_world() {
        let r = road();
        let lead = cav(0, Lane::Main1, 6.0, 0.0, &r);
        let tail = cav(1, Lane::Main1, 0.0, 20.0, &r);
        let mut w = world(vec![lead, tail]);
        let mut steps = 0;
        while w.step() && steps < 100 {
            steps += 1;
        }
        assert!(w.collided, "a 1 m gap at 20 m/s closing speed must end in contact");
        assert!(w.events.iter().any(|e| matches!(e, SimEvent::Collision { .. })));
        let t = w.time;
        assert!(!w.step(), "collided worlds refuse to advance");
        assert_eq!(w.time, t);
    }

    #[test]
    fn collision_scan_ignores_lateral_strangers() {
        let r = road();
        // Same x, different lanes: longitudinal overlap alone is not contact.
        let a = cav(0, Lane::Main1, 50.0, 20.0, &r);
        let b = cav(1, Lane::Main2, 50.0, 20.0, &r);
        let mut w = world(vec![a, b]);
        for _ in 0..50 {
            w.step();
        }
        assert!(!w.collided);
    }
}
