//! Particle-swarm baseline over the scalarized merge cost.
//!
//! Particles live in a three-dimensional continuous box; the two categorical
//! genes are decoded by flooring into the allowed value lists. Updates are
//! synchronous: the global best advances only between iterations, and each
//! particle owns a counter-derived random stream, so results depend only on
//! the seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    derive_rng, scalarized_cost, DecisionSpace, DecisionVector, MergePlan, PlanEvaluator,
    PsoConfig, ScalarBounds,
};

struct Particle {
    pos: [f64; 3],
    vel: [f64; 3],
    best_pos: [f64; 3],
    best_cost: f64,
    rng: ChaCha8Rng,
}

fn decode(pos: &[f64; 3], space: &DecisionSpace) -> DecisionVector {
    let gaps = space.gaps();
    let modes = space.modes();
    let gi = (pos[0].floor() as isize).clamp(0, gaps.len() as isize - 1) as usize;
    let mi = (pos[2].floor() as isize).clamp(0, modes.len() as isize - 1) as usize;
    DecisionVector {
        gap: gaps[gi],
        merge_end_time: space.snap_time(pos[1]),
        vmc_mode: modes[mi],
    }
}

/// Minimizes the fixed-bounds scalar cost; returns the best evaluated plan.
pub fn pso_run(
    evaluator: &impl PlanEvaluator,
    space: &DecisionSpace,
    cfg: &PsoConfig,
    bounds: &ScalarBounds,
    safe_threshold: f64,
    seed: u64,
) -> MergePlan {
    assert!(cfg.particles >= 1 && cfg.iterations >= 1);
    let dims = [
        (0.0, space.gaps().len() as f64),
        (space.t_min, space.t_max),
        (0.0, space.modes().len() as f64),
    ];
    let cost_of = |pos: &[f64; 3]| {
        let plan = evaluator.evaluate(&decode(pos, space));
        let c = scalarized_cost(&plan.objectives, bounds, safe_threshold);
        (c, plan)
    };
    let mut swarm: Vec<Particle> = (0..cfg.particles)
        .map(|i| {
            let mut rng = derive_rng(seed, i as u64 + 1);
            let pos = [
                rng.gen_range(dims[0].0..dims[0].1),
                rng.gen_range(dims[1].0..=dims[1].1),
                rng.gen_range(dims[2].0..dims[2].1),
            ];
            Particle { pos, vel: [0.0; 3], best_pos: pos, best_cost: f64::INFINITY, rng }
        })
        .collect();
    let mut global_best_pos = swarm[0].pos;
    let mut global_best_cost = f64::INFINITY;
    let mut global_best_plan: Option<MergePlan> = None;
    for p in &mut swarm {
        let (c, plan) = cost_of(&p.pos);
        p.best_cost = c;
        if c < global_best_cost {
            global_best_cost = c;
            global_best_pos = p.pos;
            global_best_plan = Some(plan);
        }
    }
    for _ in 0..cfg.iterations {
        let anchor_pos = global_best_pos;
        for p in &mut swarm {
            for k in 0..3 {
                let r1: f64 = p.rng.gen();
                let r2: f64 = p.rng.gen();
                p.vel[k] = cfg.inertia * p.vel[k]
                    + cfg.cognitive * r1 * (p.best_pos[k] - p.pos[k])
                    + cfg.social * r2 * (anchor_pos[k] - p.pos[k]);
                let range = dims[k].1 - dims[k].0;
                p.vel[k] = p.vel[k].clamp(-range, range);
                p.pos[k] = (p.pos[k] + p.vel[k]).clamp(dims[k].0, dims[k].1);
            }
            let (c, plan) = cost_of(&p.pos);
            if c < p.best_cost {
                p.best_cost = c;
                p.best_pos = p.pos;
            }
            if c < global_best_cost {
                global_best_cost = c;
                global_best_pos = p.pos;
                global_best_plan = Some(plan);
            }
        }
    }
    global_best_plan.expect("at least one particle was evaluated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveVector;
    use crate::optimizer::{GapChoice, VmcMode};

    /// Scalar bowl: cheapest at t = 9.5 with the ahead/no-cooperation genes.
    struct Bowl;

    impl PlanEvaluator for Bowl {
        fn evaluate(&self, d: &DecisionVector) -> MergePlan {
            let gene_penalty = 0.05 * d.gap.index() as f64 + 0.05 * d.vmc_mode.index() as f64;
            MergePlan {
                decision: *d,
                objectives: ObjectiveVector {
                    u_safe: 1.0,
                    u_fuel: 0.02 * (d.merge_end_time - 9.5).abs() + gene_penalty,
                    u_eff: 0.0,
                    feasible: true,
                },
                artifacts: None,
            }
        }
    }

    fn space() -> DecisionSpace {
        DecisionSpace {
            t_min: 5.0,
            t_max: 14.0,
            time_grid: None,
            behind_allowed: true,
            longitudinal_allowed: true,
            lateral_allowed: true,
        }
    }

    #[test]
    fn swarm_converges_on_the_bowl_minimum() {
        let plan = pso_run(
            &Bowl,
            &space(),
            &PsoConfig::default(),
            &ScalarBounds::default(),
            4.0,
            3,
        );
        assert!((plan.decision.merge_end_time - 9.5).abs() < 0.2, "got {:?}", plan.decision);
        assert_eq!(plan.decision.gap, GapChoice::AheadOfVmc);
        assert_eq!(plan.decision.vmc_mode, VmcMode::NoCooperation);
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let cfg = PsoConfig { particles: 10, iterations: 15, ..PsoConfig::default() };
        let a = pso_run(&Bowl, &space(), &cfg, &ScalarBounds::default(), 4.0, 9);
        let b = pso_run(&Bowl, &space(), &cfg, &ScalarBounds::default(), 4.0, 9);
        assert_eq!(a.decision.merge_end_time.to_bits(), b.decision.merge_end_time.to_bits());
        assert_eq!(a.decision.gap, b.decision.gap);
        assert_eq!(a.decision.vmc_mode, b.decision.vmc_mode);
    }

    #[test]
    fn degenerate_single_particle_swarm_still_returns_a_plan() {
        let cfg = PsoConfig { particles: 1, iterations: 1, ..PsoConfig::default() };
        let plan = pso_run(&Bowl, &space(), &cfg, &ScalarBounds::default(), 4.0, 1);
        assert!(plan.objectives.feasible);
    }
}
