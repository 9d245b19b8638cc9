//! Discretionary lane changes for background traffic. At a fixed cadence,
//! every automated background vehicle on the main road weighs a move to the
//! neighbor lane through the strategic-game decision; anyone holding a named
//! merge role is left alone so the planned maneuver stays undisturbed.

use crate::config::SimConfig;
use crate::game::{sv_decide, LocalScene, SvAction, VehicleSnapshot};

use super::world::{Lane, Role, Vehicle, VehicleKind, World};

fn snapshot(v: &Vehicle) -> VehicleSnapshot {
    VehicleSnapshot { x: v.x, v: v.v, a: v.a, length: v.length, width: v.width, idm: *v.idm() }
}

fn local_scene(world: &World, i: usize, target: Lane) -> LocalScene {
    let veh = &world.vehicles[i];
    let snap = |j: Option<usize>| j.map(|j| snapshot(&world.vehicles[j]));
    LocalScene {
        sv: snapshot(veh),
        cur_leader: snap(world.leader_in_lane(i, veh.lane)),
        cur_follower: snap(world.follower_in_lane(i, veh.lane)),
        tgt_leader: snap(world.leader_in_lane(i, target)),
        tgt_follower: snap(world.follower_in_lane(i, target)),
        lane_offset: world.road.centerline(target) - world.road.centerline(veh.lane),
    }
}

/// Runs one cadence tick of discretionary decisions when it is due.
/// Decisions are taken in vehicle-id order against the live state, so two
/// candidates cannot pick the same spot in the same tick. A change fires
/// only when it beats keeping the lane by the switch threshold, and the
/// mover then holds its new lane for the cooldown; both guards break the
/// swap-back oscillation that near-symmetric lanes otherwise sustain.
pub fn discretionary_lane_changes(world: &mut World, cfg: &SimConfig, next_check: &mut f64) {
    if !cfg.game.enabled || world.time + 1e-9 < *next_check {
        return;
    }
    *next_check = world.time + cfg.game.cadence;
    let candidates: Vec<usize> = (0..world.vehicles.len())
        .filter(|&i| {
            let v = &world.vehicles[i];
            v.role == Role::Background
                && v.kind() == VehicleKind::Cav
                && matches!(v.lane, Lane::Main1 | Lane::Main2)
                && v.lane_change.is_none()
                && v.virtual_leader.is_none()
                && world.time >= v.hold_lane_until
        })
        .collect();
    for i in candidates {
        let veh = &world.vehicles[i];
        let target = match veh.lane {
            Lane::Main1 => Lane::Main2,
            Lane::Main2 => Lane::Main1,
            Lane::Ramp => continue,
        };
        let scene = local_scene(world, i, target);
        let Ok(decision) = sv_decide(&scene, &cfg.game.styles, &cfg.game.rules) else {
            continue;
        };
        let gain = decision.expected_keep - decision.expected_change;
        if decision.action == SvAction::ChangeLane && gain > cfg.game.switch_threshold {
            let id = world.vehicles[i].id;
            world.start_lane_change(id, target, cfg.planner.lc_duration);
            world.vehicles[i].hold_lane_until =
                world.time + cfg.planner.lc_duration + cfg.game.cooldown;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::build_world;

    #[test]
    fn equilibrium_traffic_keeps_its_lanes() {
        let cfg = SimConfig::default();
        let mut world = build_world(&cfg);
        let mut next = 0.0;
        let lanes: Vec<Lane> = world.vehicles.iter().map(|v| v.lane).collect();
        for _ in 0..30 {
            discretionary_lane_changes(&mut world, &cfg, &mut next);
            world.step();
        }
        // Near equilibrium there is nothing to gain from a lane change.
        let after: Vec<Lane> = world.vehicles.iter().map(|v| v.lane).collect();
        assert_eq!(lanes, after);
    }

    #[test]
    fn a_blocked_vehicle_escapes_to_the_free_lane() {
        let cfg = SimConfig::default();
        let mut world = build_world(&cfg);
        // Stall the vehicle ahead of a middle main-lane CAV and empty the
        // neighbor lane so the move is clearly worthwhile.
        let mut lane1: Vec<usize> = (0..world.vehicles.len())
            .filter(|&i| world.vehicles[i].lane == Lane::Main1)
            .collect();
        lane1.sort_by(|&a, &b| {
            world.vehicles[b].x.partial_cmp(&world.vehicles[a].x).unwrap()
        });
        for &i in &lane1 {
            world.vehicles[i].dynamics = crate::sim::world::Dynamics::Cav(
                crate::traffic::CavParams { idm: cfg.idm, cah_weight: cfg.cav.cah_weight },
            );
        }
        let blocker = lane1[2];
        let subject = lane1[3];
        let subject_id = world.vehicles[subject].id;
        world.vehicles[blocker].v = 4.0;
        for i in 0..world.vehicles.len() {
            if world.vehicles[i].lane == Lane::Main2 {
                world.vehicles[i].x -= 5_000.0;
            }
        }
        let mut next = 0.0;
        let mut changed = false;
        for _ in 0..100 {
            discretionary_lane_changes(&mut world, &cfg, &mut next);
            if !world.step() {
                break;
            }
            let subj = world.vehicle(subject_id);
            if subj.lane == Lane::Main2 || subj.lane_change.is_some() {
                changed = true;
                break;
            }
        }
        assert!(changed, "a crawling leader and an empty neighbor lane must trigger an escape");
    }
}
