//! Initial-world construction: a ramp vehicle approaching the acceleration
//! lane plus two main-road platoons spawned near car-following equilibrium,
//! with the platoons positioned so the merge conflict actually happens inside
//! the merge window.

use rand::Rng;

use crate::config::SimConfig;
use crate::optimizer::derive_rng;
use crate::traffic::{idm_accel, CavParams, HdvParams, IdmParams, StateHistory};

use super::world::{Dynamics, Lane, RoadGeometry, Role, Vehicle, VehicleId, World};

/// Distance upstream of the acceleration lane where the ramp vehicle starts.
const RAMP_APPROACH: f64 = 150.0;

/// Speed at which a follower holding `gap` behind an equal-speed leader
/// neither accelerates nor brakes. Monotone in the gap, solved by bisection.
pub fn equilibrium_speed(p: &IdmParams, gap: f64) -> f64 {
    let accel = |v: f64| idm_accel(p, gap, v, 0.0);
    if accel(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, p.desired_speed);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if accel(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gap at which a follower moving at `v` behind an equal-speed leader is in
/// equilibrium. Diverges as `v` approaches the desired speed; `None` there.
pub fn equilibrium_gap(p: &IdmParams, v: f64) -> Option<f64> {
    let ratio = (v / p.desired_speed).powf(p.accel_exponent);
    if ratio >= 1.0 {
        return None;
    }
    Some(p.desired_gap(v, 0.0) / (1.0 - ratio).sqrt())
}

fn make_dynamics(cav: bool, cfg: &SimConfig) -> Dynamics {
    if cav {
        Dynamics::Cav(CavParams { idm: cfg.idm, cah_weight: cfg.cav.cah_weight })
    } else {
        let params = HdvParams {
            idm: cfg.idm,
            gap_delay: cfg.hdv.gap_delay,
            speed_delay: cfg.hdv.speed_delay,
            dspeed_delay: cfg.hdv.dspeed_delay,
            gap_error_factor: 1.0,
            dspeed_error_factor: 1.0,
        };
        let history = StateHistory::for_delays(params.max_delay(), cfg.dt);
        Dynamics::Hdv { params, history, last_leader: None }
    }
}

fn vehicle(id: VehicleId, role: Role, lane: Lane, x: f64, v: f64, dyn_: Dynamics, cfg: &SimConfig, road: &RoadGeometry) -> Vehicle {
    Vehicle {
        id,
        role,
        lane,
        x,
        y: road.centerline(lane),
        v,
        a: 0.0,
        length: cfg.traffic.vehicle_length,
        width: cfg.traffic.vehicle_width,
        dynamics: dyn_,
        lane_change: None,
        virtual_leader: None,
        merged_at: None,
        stopped_at: None,
        hold_lane_until: 0.0,
    }
}

/// Lays out one main-lane platoon around an anchor position: the anchor
/// vehicle sits exactly at `anchor_x`, the rest follow jittered mean
/// spacing. Returns front-to-back `(x, v)` pairs.
fn platoon_states(
    cfg: &SimConfig,
    rng: &mut impl Rng,
    anchor_x: f64,
    headway: f64,
) -> Vec<(f64, f64)> {
    let n = cfg.traffic.vehicles_per_lane as usize;
    let mean_spacing = headway * cfg.traffic.main_speed;
    let jitter = cfg.traffic.headway_jitter;
    let anchor_idx = n / 2;
    let mut spacings = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let u: f64 = if jitter > 0.0 { rng.gen_range(-jitter..jitter) } else { 0.0 };
        spacings.push(mean_spacing * (1.0 + u));
    }
    let mut xs = vec![0.0; n];
    xs[anchor_idx] = anchor_x;
    for i in (0..anchor_idx).rev() {
        xs[i] = xs[i + 1] + spacings[i];
    }
    for i in anchor_idx + 1..n {
        xs[i] = xs[i - 1] - spacings[i - 1];
    }
    let mut out = Vec::with_capacity(n);
    for (i, &x) in xs.iter().enumerate() {
        // Followers start at the equilibrium speed for their actual gap, so
        // the platoon begins the run nearly stationary in its own frame.
        let v = if i == 0 {
            equilibrium_speed(&cfg.idm, mean_spacing - cfg.traffic.vehicle_length)
        } else {
            let gap = xs[i - 1] - x - cfg.traffic.vehicle_length;
            equilibrium_speed(&cfg.idm, gap)
        };
        out.push((x, v));
    }
    out
}

/// Builds the simulation world for one run. Layout and vehicle mix come from
/// one RNG stream of the run seed, driver-noise resampling inside the world
/// from another, so the two cannot alias.
pub fn build_world(cfg: &SimConfig) -> World {
    let road = RoadGeometry::from_config(&cfg.road);
    let mut layout_rng = derive_rng(cfg.seed, 1);
    let n = cfg.traffic.vehicles_per_lane as usize;

    let vr_x = road.accel_lane_start - RAMP_APPROACH;
    // Project both parties to the merge reference point: the ramp vehicle at
    // the mean of its entry and the main-road speed (it accelerates on the
    // way in), main traffic at its nominal speed. Anchoring the platoon
    // center on the same arrival time guarantees a genuine conflict.
    let v_avg = 0.5 * (cfg.traffic.ramp_speed + cfg.traffic.main_speed);
    let t_vr = (road.merge_ref_x - vr_x) / v_avg;
    let anchor1 = road.merge_ref_x - cfg.traffic.main_speed * t_vr;
    let anchor2 = anchor1 + 0.5 * cfg.traffic.headway_main2 * cfg.traffic.main_speed;

    let lane1 = platoon_states(cfg, &mut layout_rng, anchor1, cfg.traffic.headway_main1);
    let kinds1: Vec<bool> =
        (0..n).map(|_| layout_rng.gen_bool(cfg.traffic.cav_penetration)).collect();
    let lane2 = platoon_states(cfg, &mut layout_rng, anchor2, cfg.traffic.headway_main2);
    let kinds2: Vec<bool> =
        (0..n).map(|_| layout_rng.gen_bool(cfg.traffic.cav_penetration)).collect();

    let mut vehicles = Vec::with_capacity(2 * n + 1);
    // The merging vehicle is the planned agent and is always automated.
    vehicles.push(vehicle(
        0,
        Role::Vr,
        Lane::Ramp,
        vr_x,
        cfg.traffic.ramp_speed,
        make_dynamics(true, cfg),
        cfg,
        &road,
    ));
    let mut id: VehicleId = 1;
    for (&(x, v), &cav) in lane1.iter().zip(&kinds1) {
        vehicles.push(vehicle(id, Role::Background, Lane::Main1, x, v, make_dynamics(cav, cfg), cfg, &road));
        id += 1;
    }
    for (&(x, v), &cav) in lane2.iter().zip(&kinds2) {
        vehicles.push(vehicle(id, Role::Background, Lane::Main2, x, v, make_dynamics(cav, cfg), cfg, &road));
        id += 1;
    }

    World::new(road, cfg.dt, vehicles, cfg.hdv, cfg.planner.stop_margin, derive_rng(cfg.seed, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with_seed(seed: u64) -> SimConfig {
        SimConfig { seed, ..SimConfig::default() }
    }

    #[test]
    fn equilibrium_speed_zeroes_the_acceleration() {
        let p = IdmParams::default();
        for gap in [20.0, 60.0, 125.0] {
            let v = equilibrium_speed(&p, gap);
            assert!(v > 0.0 && v < p.desired_speed);
            assert!(idm_accel(&p, gap, v, 0.0).abs() < 1e-9, "gap {gap} left residual accel");
        }
        assert!(equilibrium_speed(&p, 40.0) < equilibrium_speed(&p, 80.0));
        assert_eq!(equilibrium_speed(&p, p.min_gap), 0.0);
    }

    #[test]
    fn equilibrium_gap_inverts_equilibrium_speed() {
        let p = IdmParams::default();
        let v = equilibrium_speed(&p, 70.0);
        let gap = equilibrium_gap(&p, v).unwrap();
        assert!((gap - 70.0).abs() < 1e-6);
        assert!(equilibrium_gap(&p, p.desired_speed).is_none());
    }

    #[test]
    fn layout_is_deterministic_per_seed() {
        let a = build_world(&cfg_with_seed(7));
        let b = build_world(&cfg_with_seed(7));
        let c = build_world(&cfg_with_seed(8));
        let state = |w: &World| -> Vec<(f64, f64, &'static str)> {
            w.vehicles.iter().map(|v| (v.x, v.v, v.kind().label())).collect()
        };
        assert_eq!(state(&a), state(&b));
        assert_ne!(state(&a), state(&c));
    }

    #[test]
    fn layout_matches_the_requested_composition() {
        let cfg = cfg_with_seed(42);
        let w = build_world(&cfg);
        let n = cfg.traffic.vehicles_per_lane as usize;
        assert_eq!(w.vehicles.len(), 2 * n + 1);

        let vr = w.find_role(Role::Vr).expect("ramp vehicle present");
        assert_eq!(vr.id, 0);
        assert_eq!(vr.lane, Lane::Ramp);
        assert_eq!(vr.kind().label(), "cav");
        assert!((vr.v - cfg.traffic.ramp_speed).abs() < 1e-12);
        assert!(vr.x < w.road.accel_lane_start);

        for lane in [Lane::Main1, Lane::Main2] {
            let mut xs: Vec<f64> =
                w.vehicles.iter().filter(|v| v.lane == lane).map(|v| v.x).collect();
            assert_eq!(xs.len(), n);
            xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let headway = match lane {
                Lane::Main1 => cfg.traffic.headway_main1,
                _ => cfg.traffic.headway_main2,
            };
            let mean = headway * cfg.traffic.main_speed;
            for pair in xs.windows(2) {
                let spacing = pair[0] - pair[1];
                assert!(
                    (spacing / mean - 1.0).abs() <= cfg.traffic.headway_jitter + 1e-12,
                    "spacing {spacing} outside jitter band around {mean}"
                );
            }
        }
    }

    #[test]
    fn platoon_center_projects_to_the_same_arrival_as_the_ramp_vehicle() {
        let cfg = cfg_with_seed(3);
        let w = build_world(&cfg);
        let vr = w.find_role(Role::Vr).unwrap();
        let v_avg = 0.5 * (cfg.traffic.ramp_speed + cfg.traffic.main_speed);
        let t_vr = (w.road.merge_ref_x - vr.x) / v_avg;
        let n = cfg.traffic.vehicles_per_lane as usize;
        let mut lane1: Vec<&Vehicle> = w.vehicles.iter().filter(|v| v.lane == Lane::Main1).collect();
        lane1.sort_by(|a, b| b.x.partial_cmp(&a.x).unwrap());
        let anchor = lane1[n / 2];
        let t_anchor = (w.road.merge_ref_x - anchor.x) / cfg.traffic.main_speed;
        assert!((t_anchor - t_vr).abs() < 1e-9, "anchor arrival {t_anchor} vs ramp {t_vr}");
    }

    #[test]
    fn spawned_world_starts_calm() {
        let mut w = build_world(&cfg_with_seed(11));
        for _ in 0..50 {
            assert!(w.step(), "no collision expected in the opening seconds");
        }
        for v in &w.vehicles {
            if v.lane != Lane::Ramp {
                assert!(v.a.abs() < 0.5, "main traffic should start near equilibrium, saw {}", v.a);
            }
        }
        assert!(w.events.is_empty());
    }
}
