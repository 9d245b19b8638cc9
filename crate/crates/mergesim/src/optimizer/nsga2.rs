//! Elitist non-dominated sorting genetic algorithm over merge decisions.
//!
//! Fast non-dominated sort builds fronts in O(M N^2); crowding distance
//! spreads selection pressure along each front. Parents come from binary
//! tournaments on (rank, crowding). The continuous completion-time gene uses
//! simulated binary crossover and polynomial mutation; the two categorical
//! genes use uniform crossover and random reset. Survivor selection is
//! (mu + lambda): parents and offspring compete jointly.

use rand::Rng;

use super::{
    derive_rng, DecisionSpace, DecisionVector, GaConfig, MergePlan, PlanEvaluator,
};
use crate::objectives::dominates;

/// Deb's fast non-dominated sort. Input rows are objective vectors in
/// minimized orientation; the result maps each front (best first) to the row
/// indices it contains. Duplicate rows never dominate each other, so they
/// share a front.
pub fn non_dominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated[j].push(i);
                domination_count[i] += 1;
            }
        }
        if domination_count[i] == 0 {
            fronts[0].push(i);
        }
    }
    let mut current = 0;
    while !fronts[current].is_empty() {
        let mut next = Vec::new();
        for &i in &fronts[current] {
            for &j in &dominated[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        current += 1;
        fronts.push(next);
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of one front. Boundary members along any
/// objective get infinity; an objective with zero spread contributes nothing.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    let m = front[0].len();
    let mut distance = vec![0.0f64; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        order.sort_by(|&a, &b| front[a][obj].total_cmp(&front[b][obj]));
        let lo = front[order[0]][obj];
        let hi = front[order[n - 1]][obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for k in 1..n - 1 {
                let gap = front[order[k + 1]][obj] - front[order[k - 1]][obj];
                distance[order[k]] += gap / (hi - lo);
            }
        }
    }
    distance
}

struct Ranked {
    plan: MergePlan,
    rank: usize,
    crowding: f64,
}

fn rank_population(plans: Vec<MergePlan>) -> Vec<Ranked> {
    let points: Vec<Vec<f64>> = plans.iter().map(|p| p.objectives.minimized().to_vec()).collect();
    let fronts = non_dominated_sort(&points);
    let mut ranked: Vec<Option<Ranked>> = plans
        .into_iter()
        .map(|plan| Some(Ranked { plan, rank: 0, crowding: 0.0 }))
        .collect();
    for (rank, front) in fronts.iter().enumerate() {
        let rows: Vec<Vec<f64>> = front.iter().map(|&i| points[i].clone()).collect();
        let crowd = crowding_distance(&rows);
        for (k, &i) in front.iter().enumerate() {
            let r = ranked[i].as_mut().unwrap();
            r.rank = rank;
            r.crowding = crowd[k];
        }
    }
    ranked.into_iter().map(|r| r.unwrap()).collect()
}

fn tournament<'a>(pop: &'a [Ranked], rng: &mut impl Rng) -> &'a Ranked {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding) {
        a
    } else {
        b
    }
}

fn sbx_pair(p1: f64, p2: f64, eta: f64, rng: &mut impl Rng) -> (f64, f64) {
    let u: f64 = rng.gen();
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    (
        0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2),
        0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2),
    )
}

fn polynomial_step(t: f64, lo: f64, hi: f64, eta: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    let delta = if u < 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0))
    };
    t + delta * (hi - lo)
}

fn crossover(
    a: &DecisionVector,
    b: &DecisionVector,
    space: &DecisionSpace,
    cfg: &GaConfig,
    rng: &mut impl Rng,
) -> (DecisionVector, DecisionVector) {
    let mut c1 = *a;
    let mut c2 = *b;
    if rng.gen::<f64>() <= cfg.crossover_prob {
        let (t1, t2) = sbx_pair(a.merge_end_time, b.merge_end_time, cfg.sbx_eta, rng);
        c1.merge_end_time = space.snap_time(t1);
        c2.merge_end_time = space.snap_time(t2);
        if rng.gen::<bool>() {
            std::mem::swap(&mut c1.gap, &mut c2.gap);
        }
        if rng.gen::<bool>() {
            std::mem::swap(&mut c1.vmc_mode, &mut c2.vmc_mode);
        }
    }
    (c1, c2)
}

fn mutate(d: &mut DecisionVector, space: &DecisionSpace, cfg: &GaConfig, rng: &mut impl Rng) {
    if rng.gen::<f64>() < cfg.mutation_prob {
        let stepped =
            polynomial_step(d.merge_end_time, space.t_min, space.t_max, cfg.mutation_eta, rng);
        d.merge_end_time = space.snap_time(stepped);
    }
    if rng.gen::<f64>() < cfg.mutation_prob {
        let gaps = space.gaps();
        d.gap = gaps[rng.gen_range(0..gaps.len())];
    }
    if rng.gen::<f64>() < cfg.mutation_prob {
        let modes = space.modes();
        d.vmc_mode = modes[rng.gen_range(0..modes.len())];
    }
}

/// Runs the full evolutionary loop and returns the first front of the final
/// population, deduplicated by decision vector.
pub fn nsga2_run(
    evaluator: &impl PlanEvaluator,
    space: &DecisionSpace,
    cfg: &GaConfig,
    seed: u64,
) -> Vec<MergePlan> {
    assert!(cfg.population >= 2, "population must hold at least two individuals");
    let mut stream = 0u64;
    let next_rng = |stream: &mut u64| {
        *stream += 1;
        derive_rng(seed, *stream)
    };
    let mut population: Vec<MergePlan> = (0..cfg.population)
        .map(|_| {
            let mut rng = next_rng(&mut stream);
            evaluator.evaluate(&space.sample(&mut rng))
        })
        .collect();
    for _ in 0..cfg.generations {
        let ranked = rank_population(population);
        let mut offspring: Vec<MergePlan> = Vec::with_capacity(cfg.population);
        while offspring.len() < cfg.population {
            let mut rng = next_rng(&mut stream);
            let p1 = tournament(&ranked, &mut rng);
            let p2 = tournament(&ranked, &mut rng);
            let (mut d1, mut d2) = crossover(&p1.plan.decision, &p2.plan.decision, space, cfg, &mut rng);
            mutate(&mut d1, space, cfg, &mut rng);
            mutate(&mut d2, space, cfg, &mut rng);
            offspring.push(evaluator.evaluate(&d1));
            if offspring.len() < cfg.population {
                offspring.push(evaluator.evaluate(&d2));
            }
        }
        // (mu + lambda) survivor selection over the combined pool.
        let mut pool: Vec<MergePlan> = ranked.into_iter().map(|r| r.plan).collect();
        pool.extend(offspring);
        let mut ranked_pool = rank_population(pool);
        ranked_pool.sort_by(|a, b| {
            a.rank.cmp(&b.rank).then_with(|| b.crowding.total_cmp(&a.crowding))
        });
        ranked_pool.truncate(cfg.population);
        population = ranked_pool.into_iter().map(|r| r.plan).collect();
    }
    let points: Vec<Vec<f64>> = population.iter().map(|p| p.objectives.minimized().to_vec()).collect();
    let fronts = non_dominated_sort(&points);
    let mut front0: Vec<MergePlan> = fronts
        .first()
        .map(|f| f.iter().map(|&i| population[i].clone()).collect())
        .unwrap_or_default();
    front0.sort_by(|a, b| a.decision.lex_cmp(&b.decision));
    front0.dedup_by(|a, b| a.decision.lex_cmp(&b.decision) == std::cmp::Ordering::Equal);
    front0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveVector;
    use crate::optimizer::{GapChoice, VmcMode};

    #[test]
    fn sort_recovers_hand_built_fronts() {
        let points = vec![
            vec![1.0, 4.0], // A: front 0
            vec![2.0, 2.0], // B: front 0
            vec![4.0, 1.0], // C: front 0
            vec![2.0, 5.0], // D: dominated by A
            vec![3.0, 3.0], // E: dominated by B
            vec![5.0, 5.0], // F: dominated by everything above it
        ];
        let fronts = non_dominated_sort(&points);
        assert_eq!(fronts[0], vec![0, 1, 2]);
        assert_eq!(fronts[1], vec![3, 4]);
        assert_eq!(fronts[2], vec![5]);
    }

    #[test]
    fn duplicates_share_a_front_and_empty_input_yields_none() {
        let points = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let fronts = non_dominated_sort(&points);
        assert_eq!(fronts[0], vec![0, 1]);
        assert_eq!(fronts[1], vec![2]);
        assert!(non_dominated_sort(&[]).is_empty());
    }

    #[test]
    fn crowding_marks_boundaries_infinite() {
        let front = vec![
            vec![0.0, 10.0],
            vec![2.0, 6.0],
            vec![5.0, 5.0],
            vec![10.0, 0.0],
        ];
        let d = crowding_distance(&front);
        assert_eq!(d[0], f64::INFINITY);
        assert_eq!(d[3], f64::INFINITY);
        // Interior: normalized neighbor span per objective.
        assert!((d[1] - ((5.0 - 0.0) / 10.0 + (10.0 - 5.0) / 10.0)).abs() < 1e-12);
        assert!((d[2] - ((10.0 - 2.0) / 10.0 + (6.0 - 0.0) / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn crowding_ignores_flat_objectives() {
        let front = vec![vec![0.0, 7.0], vec![1.0, 7.0], vec![2.0, 7.0], vec![4.0, 7.0]];
        let d = crowding_distance(&front);
        assert!((d[1] - 2.0 / 4.0).abs() < 1e-12);
        assert!((d[2] - 3.0 / 4.0).abs() < 1e-12);
    }

    /// Synthetic landscape: two objectives trade off along the completion
    /// time, pulled toward 8 s and 12 s; gap/mode shift the whole surface.
    struct Synthetic;

    impl PlanEvaluator for Synthetic {
        fn evaluate(&self, d: &DecisionVector) -> MergePlan {
            let t = d.merge_end_time;
            let offset = match (d.gap, d.vmc_mode) {
                (GapChoice::AheadOfVmc, VmcMode::NoCooperation) => 0.0,
                (GapChoice::AheadOfVmc, _) => 0.2,
                (GapChoice::BehindVmc, _) => 0.5,
            };
            MergePlan {
                decision: *d,
                objectives: ObjectiveVector {
                    u_safe: (t - 8.0).powi(2) + offset,
                    u_fuel: (t - 12.0).powi(2) + offset,
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
    fn evolution_recovers_the_exact_grid_front() {
        // On a snapped grid the Pareto set is enumerable by hand: the
        // zero-offset genes at every half-second from 8 to 12. Any plan with
        // offset genes is strictly dominated by the zero-offset plan at the
        // same time, so a converged run returns exactly these nine.
        let space = DecisionSpace { time_grid: Some(19), ..space() };
        let cfg = GaConfig { population: 32, generations: 40, ..GaConfig::default() };
        let front = nsga2_run(&Synthetic, &space, &cfg, 11);
        let expected: Vec<f64> = (0..9).map(|k| 8.0 + 0.5 * k as f64).collect();
        assert_eq!(front.len(), expected.len(), "front size");
        for (plan, want_t) in front.iter().zip(&expected) {
            assert!((plan.decision.merge_end_time - want_t).abs() < 1e-9);
            assert_eq!(plan.decision.gap, GapChoice::AheadOfVmc);
            assert_eq!(plan.decision.vmc_mode, VmcMode::NoCooperation);
        }
    }

    #[test]
    fn runs_repeat_bit_for_bit_per_seed() {
        let cfg = GaConfig { population: 16, generations: 12, ..GaConfig::default() };
        let a = nsga2_run(&Synthetic, &space(), &cfg, 5);
        let b = nsga2_run(&Synthetic, &space(), &cfg, 5);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.decision.merge_end_time.to_bits(), y.decision.merge_end_time.to_bits());
            assert_eq!(x.decision.gap, y.decision.gap);
        }
        let c = nsga2_run(&Synthetic, &space(), &cfg, 6);
        let same = a.len() == c.len()
            && a.iter()
                .zip(&c)
                .all(|(x, y)| x.decision.merge_end_time.to_bits() == y.decision.merge_end_time.to_bits());
        assert!(!same, "different seeds should explore differently");
    }
}
