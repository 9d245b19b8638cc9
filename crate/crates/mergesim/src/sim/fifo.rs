//! First-in-first-out baseline: vehicles keep their projected arrival order
//! at the merge point. The ramp vehicle virtually follows its predecessor in
//! that order, the automated successor virtually follows the ramp vehicle,
//! and the lane change fires at the merge reference point as soon as the
//! move is physically insertable, comfortable or not. No optimization, no
//! negotiated cooperation.

use crate::config::SimConfig;
use crate::planning::TransitionBlend;
use crate::traffic::idm_accel;

use super::background::discretionary_lane_changes;
use super::result::{Recorder, RunRecord};
use super::scenario::build_world;
use super::scene::{apply_roles, assign_roles};
use super::world::{
    Lane, Role, VehicleId, VehicleKind, VirtualLeader, VirtualTarget, World,
};

/// A virtual platoon link is only engaged once the target is physically far
/// enough ahead that following it is well-posed.
fn can_track(world: &World, follower: VehicleId, target: VehicleId) -> bool {
    let f = world.vehicle(follower);
    let t = world.vehicle(target);
    t.x - f.x > 0.5 * (t.length + f.length) + f.idm().min_gap
}

fn engage_tracking(world: &mut World, follower: VehicleId, target: VehicleId, blend: f64) {
    let t0 = world.time;
    let veh_len = world.vehicle(target).length;
    let veh = world.vehicle_mut(follower);
    veh.virtual_leader = Some(VirtualLeader {
        target: VirtualTarget::Tracked(target),
        blend: TransitionBlend::from_window(t0, t0 + blend).expect("positive blend window"),
        expires: f64::INFINITY,
        length: veh_len,
    });
}

/// Arrival order, not comfort, decides the merge: the move only waits while
/// it is physically uninsertable, meaning a neighbor would overlap the slot
/// or the new follower would be thrown past the hardest merge braking.
fn insertable(world: &World, vr_idx: usize, max_decel: f64) -> bool {
    let vr = &world.vehicles[vr_idx];
    if let Some(j) = world.leader_in_lane(vr_idx, Lane::Main1) {
        let lead = &world.vehicles[j];
        let gap = lead.x - vr.x - 0.5 * (lead.length + vr.length);
        if gap < vr.idm().min_gap {
            return false;
        }
    }
    if let Some(j) = world.follower_in_lane(vr_idx, Lane::Main1) {
        let fol = &world.vehicles[j];
        let gap = vr.x - fol.x - 0.5 * (fol.length + vr.length);
        if gap < fol.idm().min_gap
            || idm_accel(fol.idm(), gap, fol.v, fol.v - vr.v) < -max_decel
        {
            return false;
        }
    }
    true
}

/// Runs one full simulation under the arrival-order baseline.
pub fn run_fifo(cfg: &SimConfig) -> RunRecord {
    let mut world = build_world(cfg);
    let vr = world.find_role(Role::Vr).expect("scenario always spawns a ramp vehicle").id;
    let roles = assign_roles(&world, vr);
    apply_roles(&mut world, vr, &roles);
    // Arrival order around the ramp vehicle: it follows the vehicle arriving
    // just before it, and the first vehicle arriving after yields to it if
    // automated.
    let predecessor = roles.vmf;
    let yielder = roles
        .vmc
        .filter(|&id| world.vehicle(id).kind() == VehicleKind::Cav);

    let mut recorder = Recorder::new(&world);
    recorder.sample(&world);
    let blend = cfg.planner.blend_duration;
    let mut vr_linked = false;
    let mut yielder_linked = false;
    let mut next_game = 0.0;

    while world.time < cfg.duration - 1e-9 {
        let merged = world.vehicle(vr).merged_at.is_some();
        if merged {
            // Physical following has taken over; drop the virtual platoon.
            if vr_linked {
                world.vehicle_mut(vr).virtual_leader = None;
                vr_linked = false;
            }
            if yielder_linked {
                if let Some(y) = yielder {
                    world.vehicle_mut(y).virtual_leader = None;
                }
                yielder_linked = false;
            }
        } else {
            if !vr_linked {
                if let Some(p) = predecessor {
                    if can_track(&world, vr, p) {
                        engage_tracking(&mut world, vr, p, blend);
                        vr_linked = true;
                    }
                }
            }
            if !yielder_linked {
                if let Some(y) = yielder {
                    if can_track(&world, y, vr) {
                        engage_tracking(&mut world, y, vr, blend);
                        yielder_linked = true;
                    }
                }
            }
            let vr_idx =
                world.vehicles.iter().position(|v| v.id == vr).expect("ramp vehicle present");
            let veh = &world.vehicles[vr_idx];
            if veh.lane == Lane::Ramp && veh.lane_change.is_none() {
                let (_, end) = world.road.merge_window();
                let runway = veh.x + (veh.v * cfg.planner.lc_duration).max(1.0);
                if veh.x >= world.road.merge_ref_x
                    && runway <= end
                    && insertable(&world, vr_idx, cfg.safety.merge_max_decel)
                {
                    world.start_lane_change(vr, Lane::Main1, cfg.planner.lc_duration);
                }
            }
        }
        discretionary_lane_changes(&mut world, cfg, &mut next_game);
        let alive = world.step();
        recorder.sample(&world);
        if !alive {
            break;
        }
    }
    recorder.finish(&world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ControllerKind;

    #[test]
    fn baseline_merges_the_default_scenario() {
        let cfg = SimConfig { controller: ControllerKind::Fifo, ..SimConfig::default() };
        let rec = run_fifo(&cfg);
        assert!(!rec.collided, "the baseline must handle the default scenario");
        assert!(rec.merge_time.is_some(), "gap acceptance must eventually admit the merge");
        assert!(rec.adopted_plan.is_none(), "the baseline never plans");
    }

    #[test]
    fn baseline_runs_are_reproducible() {
        let cfg = SimConfig { seed: 13, ..SimConfig::default() };
        let a = run_fifo(&cfg);
        let b = run_fifo(&cfg);
        let squash = |r: &RunRecord| -> Vec<(f64, f64)> {
            r.traces.iter().flat_map(|t| t.points.iter().map(|p| (p.x, p.v))).collect()
        };
        assert_eq!(squash(&a), squash(&b));
    }

    #[test]
    fn roles_are_marked_for_measurement() {
        let cfg = SimConfig::default();
        let rec = run_fifo(&cfg);
        let key_count = rec.traces.iter().filter(|t| t.role.is_key()).count();
        assert!(key_count >= 4, "the conflict neighborhood must be marked, got {key_count}");
    }
}
