//! The cooperative merge controller: freeze the scene at control-zone
//! entry, search the decision space with the configured optimizer, adopt one
//! plan, and execute it through virtual-leader guidance and scheduled lane
//! changes. Replanning happens only when no feasible plan exists yet or the
//! adopted one runs out.

use crate::config::{OptimizerKind, SimConfig};
use crate::objectives::select_unique;
use crate::optimizer::nsga2::nsga2_run;
use crate::optimizer::pso::pso_run;
use crate::optimizer::sa::sa_run;
use crate::optimizer::{derive_seed, scalarized_cost, MergePlan, PlanArtifacts};
use crate::planning::TransitionBlend;
use crate::sim::scene::{apply_roles, MergeScene};

use super::background::discretionary_lane_changes;
use super::result::{Recorder, RunRecord};
use super::scenario::build_world;
use super::world::{Lane, Role, SimEvent, VehicleId, VirtualLeader, VirtualTarget, World};

struct ActivePlan {
    tf_abs: f64,
    vr_window: (f64, f64),
    vmc_lc: Option<(VehicleId, (f64, f64))>,
    vmc: Option<VehicleId>,
    vr_started: bool,
    vmc_started: bool,
}

struct PlannerState {
    vr: VehicleId,
    next_attempt: f64,
    episode: u64,
    active: Option<ActivePlan>,
    adopted: Option<MergePlan>,
    plan_cost: Option<f64>,
}

/// Search outcome of one planning episode: the plan to execute plus the
/// comparable decision cost reported for optimizer benchmarking.
fn search(scene: &MergeScene, cfg: &SimConfig, seed: u64) -> Option<(MergePlan, f64)> {
    let space = scene.decision_space();
    match cfg.optimizer {
        OptimizerKind::Nsga2 => {
            let front = nsga2_run(scene, &space, &cfg.ga, seed);
            let feasible: Vec<MergePlan> =
                front.into_iter().filter(|p| p.objectives.feasible).collect();
            if feasible.is_empty() {
                return None;
            }
            let cost = feasible
                .iter()
                .map(|p| scalarized_cost(&p.objectives, &cfg.scalar, cfg.safety.accept_threshold))
                .fold(f64::INFINITY, f64::min);
            let chosen = select_unique(&feasible, &cfg.safety).ok()?.clone();
            Some((chosen, cost))
        }
        OptimizerKind::Pso => {
            let best =
                pso_run(scene, &space, &cfg.pso, &cfg.scalar, cfg.safety.accept_threshold, seed);
            best.objectives.feasible.then(|| {
                let cost =
                    scalarized_cost(&best.objectives, &cfg.scalar, cfg.safety.accept_threshold);
                (best, cost)
            })
        }
        OptimizerKind::Sa => {
            let best =
                sa_run(scene, &space, &cfg.sa, &cfg.scalar, cfg.safety.accept_threshold, seed);
            best.objectives.feasible.then(|| {
                let cost =
                    scalarized_cost(&best.objectives, &cfg.scalar, cfg.safety.accept_threshold);
                (best, cost)
            })
        }
    }
}

fn install_guidance(world: &mut World, id: VehicleId, art_guide: crate::planning::CubicMotion, blend_end: f64, expires: f64) {
    let t0 = world.time;
    let veh = world.vehicle_mut(id);
    veh.virtual_leader = Some(VirtualLeader {
        target: VirtualTarget::Planned(art_guide),
        blend: TransitionBlend::from_window(t0, blend_end).expect("positive blend window"),
        expires,
        length: veh.length,
    });
}

fn clear_guidance(world: &mut World, ids: impl IntoIterator<Item = VehicleId>) {
    for id in ids {
        world.vehicle_mut(id).virtual_leader = None;
    }
}

impl PlannerState {
    fn adopt(&mut self, world: &mut World, cfg: &SimConfig, scene: &MergeScene, plan: MergePlan, cost: f64) {
        let art: &PlanArtifacts = plan.artifacts.as_ref().expect("feasible plans carry artifacts");
        let t = world.time;
        let blend_end = t + cfg.planner.blend_duration;
        apply_roles(world, self.vr, &scene.roles);
        install_guidance(world, self.vr, art.vr_guide, blend_end, art.vr_lc_window.1);
        let mut vmc_used = None;
        if let Some(guide) = art.vmc_guide {
            let vmc = scene.roles.vmc.expect("cooperation implies a cooperating vehicle");
            install_guidance(world, vmc, guide, blend_end, art.vr_lc_window.1);
            vmc_used = Some(vmc);
        }
        world.events.push(SimEvent::PlanAdopted {
            t,
            gap: plan.decision.gap,
            mode: plan.decision.vmc_mode,
            end_time: art.vr_lc_window.1,
        });
        self.active = Some(ActivePlan {
            tf_abs: art.vr_lc_window.1,
            vr_window: art.vr_lc_window,
            vmc_lc: art.vmc_lc_window.map(|w| (vmc_used.expect("lateral implies guidance"), w)),
            vmc: vmc_used,
            vr_started: false,
            vmc_started: false,
        });
        self.adopted = Some(plan);
        self.plan_cost = Some(cost);
    }

    fn abandon(&mut self, world: &mut World) {
        if let Some(active) = self.active.take() {
            clear_guidance(world, [self.vr].into_iter().chain(active.vmc));
        }
        self.next_attempt = world.time;
    }

    fn before_step(&mut self, world: &mut World, cfg: &SimConfig) {
        let (vr_merged, vr_mid_change) = {
            let vr = world.vehicle(self.vr);
            (vr.merged_at.is_some(), vr.lane_change.is_some())
        };

        if vr_merged {
            if let Some(active) = self.active.take() {
                clear_guidance(world, [self.vr].into_iter().chain(active.vmc));
            }
            return;
        }

        match &mut self.active {
            None => {
                if world.time + 1e-9 >= self.next_attempt && !vr_mid_change {
                    let seed = derive_seed(cfg.seed, 3 + self.episode);
                    self.episode += 1;
                    let scene = match MergeScene::freeze(world, cfg) {
                        Ok(s) => s,
                        Err(_) => {
                            self.next_attempt = world.time + cfg.planner.replan_period;
                            return;
                        }
                    };
                    match search(&scene, cfg, seed) {
                        Some((plan, cost)) => self.adopt(world, cfg, &scene, plan, cost),
                        None => {
                            world.events.push(SimEvent::PlanningFailed { t: world.time });
                            self.next_attempt = world.time + cfg.planner.replan_period;
                        }
                    }
                }
            }
            Some(active) => {
                if world.time > active.tf_abs + 1.0 {
                    // The plan expired without a completed merge.
                    self.abandon(world);
                    return;
                }
                if !active.vr_started && world.time + 1e-9 >= active.vr_window.0 {
                    let vr = world.vehicle(self.vr);
                    let (start, end) = world.road.merge_window();
                    let runway = vr.x + (vr.v * cfg.planner.lc_duration).max(1.0);
                    if vr.lane == Lane::Ramp
                        && vr.lane_change.is_none()
                        && vr.x >= start
                        && runway <= end
                    {
                        world.start_lane_change(self.vr, Lane::Main1, cfg.planner.lc_duration);
                        active.vr_started = true;
                    }
                }
                if let Some((vmc, window)) = active.vmc_lc {
                    if !active.vmc_started && world.time + 1e-9 >= window.0 {
                        let v = world.vehicle(vmc);
                        if v.lane == Lane::Main1 && v.lane_change.is_none() {
                            world.start_lane_change(vmc, Lane::Main2, cfg.planner.lc_duration);
                            active.vmc_started = true;
                        }
                    }
                }
            }
        }
    }
}

/// Runs one full simulation under the cooperative controller.
pub fn run_hcomc(cfg: &SimConfig) -> RunRecord {
    let mut world = build_world(cfg);
    let vr = world.find_role(Role::Vr).expect("scenario always spawns a ramp vehicle").id;
    let mut recorder = Recorder::new(&world);
    recorder.sample(&world);
    let mut planner = PlannerState {
        vr,
        next_attempt: 0.0,
        episode: 0,
        active: None,
        adopted: None,
        plan_cost: None,
    };
    let mut next_game = 0.0;
    while world.time < cfg.duration - 1e-9 {
        planner.before_step(&mut world, cfg);
        discretionary_lane_changes(&mut world, cfg, &mut next_game);
        let alive = world.step();
        recorder.sample(&world);
        if !alive {
            break;
        }
    }
    let mut rec = recorder.finish(&world);
    rec.adopted_plan = planner.adopted;
    rec.plan_cost = planner.plan_cost;
    rec
}
