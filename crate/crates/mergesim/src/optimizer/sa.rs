//! Simulated-annealing baseline over the scalarized merge cost.
//!
//! Geometric cooling from `initial_temp` to `final_temp`; neighbors perturb
//! the completion time within a temperature-scaled window and occasionally
//! reset a categorical gene. Metropolis acceptance; the best state ever
//! visited is returned, so a zero-step schedule degenerates to the best of
//! the initial sample.

use rand::Rng;

use super::{
    derive_rng, scalarized_cost, DecisionSpace, DecisionVector, MergePlan, PlanEvaluator,
    SaConfig, ScalarBounds,
};

fn neighbor(
    d: &DecisionVector,
    space: &DecisionSpace,
    progress: f64,
    rng: &mut impl Rng,
) -> DecisionVector {
    let mut next = *d;
    // Step window shrinks from 30% of the range to 3% as the schedule cools.
    let window = (space.t_max - space.t_min) * (0.3 * (1.0 - progress)).max(0.03);
    next.merge_end_time =
        space.snap_time(d.merge_end_time + rng.gen_range(-window..=window));
    if rng.gen::<f64>() < 0.3 {
        let gaps = space.gaps();
        next.gap = gaps[rng.gen_range(0..gaps.len())];
    }
    if rng.gen::<f64>() < 0.3 {
        let modes = space.modes();
        next.vmc_mode = modes[rng.gen_range(0..modes.len())];
    }
    next
}

/// Minimizes the fixed-bounds scalar cost; returns the best evaluated plan.
pub fn sa_run(
    evaluator: &impl PlanEvaluator,
    space: &DecisionSpace,
    cfg: &SaConfig,
    bounds: &ScalarBounds,
    safe_threshold: f64,
    seed: u64,
) -> MergePlan {
    let mut rng = derive_rng(seed, 0);
    let cost_of = |d: &DecisionVector| {
        let plan = evaluator.evaluate(d);
        let c = scalarized_cost(&plan.objectives, bounds, safe_threshold);
        (c, plan)
    };
    let mut current = space.sample(&mut rng);
    let (mut current_cost, mut best_plan) = cost_of(&current);
    let mut best_cost = current_cost;
    if cfg.steps == 0 {
        return best_plan;
    }
    let t_ratio = (cfg.final_temp / cfg.initial_temp).max(1e-12);
    for step in 0..cfg.steps {
        let mut step_rng = derive_rng(seed, step as u64 + 1);
        let progress = step as f64 / cfg.steps as f64;
        let temp = cfg.initial_temp * (t_ratio.ln() * progress).exp();
        let candidate = neighbor(&current, space, progress, &mut step_rng);
        let (cost, plan) = cost_of(&candidate);
        let accept = cost <= current_cost
            || step_rng.gen::<f64>() < ((current_cost - cost) / temp).exp();
        if accept {
            current = candidate;
            current_cost = cost;
        }
        if cost < best_cost {
            best_cost = cost;
            best_plan = plan;
        }
    }
    best_plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveVector;
    use crate::optimizer::{GapChoice, VmcMode};

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
    fn annealing_settles_near_the_bowl_minimum() {
        let plan =
            sa_run(&Bowl, &space(), &SaConfig::default(), &ScalarBounds::default(), 4.0, 17);
        assert!((plan.decision.merge_end_time - 9.5).abs() < 0.3, "got {:?}", plan.decision);
        assert_eq!(plan.decision.gap, GapChoice::AheadOfVmc);
        assert_eq!(plan.decision.vmc_mode, VmcMode::NoCooperation);
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let cfg = SaConfig { steps: 200, ..SaConfig::default() };
        let a = sa_run(&Bowl, &space(), &cfg, &ScalarBounds::default(), 4.0, 23);
        let b = sa_run(&Bowl, &space(), &cfg, &ScalarBounds::default(), 4.0, 23);
        assert_eq!(a.decision.merge_end_time.to_bits(), b.decision.merge_end_time.to_bits());
    }

    #[test]
    fn zero_step_schedule_returns_the_initial_sample() {
        let cfg = SaConfig { steps: 0, ..SaConfig::default() };
        let plan = sa_run(&Bowl, &space(), &cfg, &ScalarBounds::default(), 4.0, 2);
        assert!(plan.objectives.feasible);
    }
}
