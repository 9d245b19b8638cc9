//! Search over candidate merge decisions.
//!
//! A decision is three genes: which slot to take relative to the cooperating
//! vehicle, when the merge should complete, and how the cooperating vehicle
//! assists. [`nsga2::nsga2_run`] evolves a Pareto front over the three
//! objectives; [`pso::pso_run`] and [`sa::sa_run`] are single-objective
//! baselines minimizing the fixed-bounds scalarization in
//! [`scalarized_cost`]. All three draw every random number from streams
//! derived deterministically from one master seed, so runs repeat bit-for-bit.

pub mod nsga2;
pub mod pso;
pub mod sa;

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::MergeGapClass;
use crate::objectives::ObjectiveVector;
use crate::planning::CubicMotion;

/// Slot choice relative to the cooperating mainline vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapChoice {
    AheadOfVmc,
    BehindVmc,
}

impl GapChoice {
    pub fn index(self) -> usize {
        match self {
            GapChoice::AheadOfVmc => 0,
            GapChoice::BehindVmc => 1,
        }
    }
}

/// Cooperation maneuver requested from the mainline vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VmcMode {
    NoCooperation,
    Longitudinal,
    Lateral,
}

impl VmcMode {
    pub fn index(self) -> usize {
        match self {
            VmcMode::NoCooperation => 0,
            VmcMode::Longitudinal => 1,
            VmcMode::Lateral => 2,
        }
    }
}

/// One candidate merge decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionVector {
    pub gap: GapChoice,
    /// Horizon end: the merge must be complete this many seconds after the
    /// planning instant.
    pub merge_end_time: f64,
    pub vmc_mode: VmcMode,
}

impl DecisionVector {
    /// Deterministic tie-break order: slot, then completion time, then mode.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.gap
            .index()
            .cmp(&other.gap.index())
            .then_with(|| self.merge_end_time.total_cmp(&other.merge_end_time))
            .then_with(|| self.vmc_mode.index().cmp(&other.vmc_mode.index()))
    }
}

/// Everything the executor needs to act on a chosen decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanArtifacts {
    /// Virtual leader for the ramp vehicle, in absolute simulation time.
    pub vr_guide: CubicMotion,
    /// Virtual leader for the cooperating vehicle when it cooperates.
    pub vmc_guide: Option<CubicMotion>,
    /// Ramp vehicle lane-change window (start, end), absolute time.
    pub vr_lc_window: (f64, f64),
    /// Cooperating vehicle's lane-change window under lateral cooperation.
    pub vmc_lc_window: Option<(f64, f64)>,
    pub gap_class: MergeGapClass,
}

/// A fully evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct MergePlan {
    pub decision: DecisionVector,
    pub objectives: ObjectiveVector,
    /// Present only for feasible plans.
    pub artifacts: Option<PlanArtifacts>,
}

/// Supplies objective vectors for decisions; implemented by the frozen merge
/// scene and by synthetic landscapes in tests.
pub trait PlanEvaluator {
    fn evaluate(&self, decision: &DecisionVector) -> MergePlan;
}

/// Feasible region of the decision genes for one planning episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionSpace {
    pub t_min: f64,
    pub t_max: f64,
    /// When set, completion times are restricted to this many equally spaced
    /// grid values, which makes the space exhaustively enumerable.
    pub time_grid: Option<u32>,
    /// Slot behind the cooperating vehicle exists (there is a rear neighbor
    /// or room for one).
    pub behind_allowed: bool,
    /// Longitudinal cooperation available (the cooperating vehicle is
    /// automated).
    pub longitudinal_allowed: bool,
    /// Lateral cooperation available (automated, and the neighbor lane has
    /// usable space).
    pub lateral_allowed: bool,
}

impl DecisionSpace {
    pub fn gaps(&self) -> &'static [GapChoice] {
        if self.behind_allowed {
            &[GapChoice::AheadOfVmc, GapChoice::BehindVmc]
        } else {
            &[GapChoice::AheadOfVmc]
        }
    }

    pub fn modes(&self) -> Vec<VmcMode> {
        let mut modes = vec![VmcMode::NoCooperation];
        if self.longitudinal_allowed {
            modes.push(VmcMode::Longitudinal);
        }
        if self.lateral_allowed {
            modes.push(VmcMode::Lateral);
        }
        modes
    }

    /// Nearest representable completion time.
    pub fn snap_time(&self, t: f64) -> f64 {
        let t = t.clamp(self.t_min, self.t_max);
        match self.time_grid {
            Some(n) if n > 1 => {
                let step = (self.t_max - self.t_min) / (n - 1) as f64;
                let k = ((t - self.t_min) / step).round();
                self.t_min + k * step
            }
            Some(_) => self.t_min,
            None => t,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> DecisionVector {
        let gaps = self.gaps();
        let modes = self.modes();
        DecisionVector {
            gap: gaps[rng.gen_range(0..gaps.len())],
            merge_end_time: self.snap_time(rng.gen_range(self.t_min..=self.t_max)),
            vmc_mode: modes[rng.gen_range(0..modes.len())],
        }
    }

    /// Every representable decision; only meaningful with a time grid.
    pub fn enumerate(&self) -> Vec<DecisionVector> {
        let n = self.time_grid.unwrap_or(1).max(1);
        let mut all = Vec::new();
        for &gap in self.gaps() {
            for k in 0..n {
                let t = if n > 1 {
                    self.t_min + (self.t_max - self.t_min) * k as f64 / (n - 1) as f64
                } else {
                    self.t_min
                };
                for mode in self.modes() {
                    all.push(DecisionVector { gap, merge_end_time: t, vmc_mode: mode });
                }
            }
        }
        all
    }
}

/// Fixed reference bounds for collapsing the objective triple to one number.
/// Unlike the within-front normalization used for final plan selection, these
/// come from configuration so that costs are comparable across runs and
/// optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalarBounds {
    pub fuel: (f64, f64),
    /// Bounds on the negated incentive `-u_eff`.
    pub neg_eff: (f64, f64),
}

impl Default for ScalarBounds {
    fn default() -> Self {
        Self { fuel: (0.0, 0.5), neg_eff: (-3.0, 3.0) }
    }
}

/// Scalar merge cost: infeasible plans are prohibitive, plans whose critical
/// deceleration exceeds `safe_threshold` rank by that deceleration above
/// everything acceptable, and acceptable plans sum the two normalized
/// economy terms.
pub fn scalarized_cost(o: &ObjectiveVector, bounds: &ScalarBounds, safe_threshold: f64) -> f64 {
    if !o.feasible {
        return 1.0e9;
    }
    if o.u_safe > safe_threshold {
        return 1.0e3 + o.u_safe;
    }
    let norm = |v: f64, (lo, hi): (f64, f64)| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    norm(o.u_fuel, bounds.fuel) + norm(-o.u_eff, bounds.neg_eff)
}

/// NSGA-II settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; the default is one expected mutation
    /// per three-gene genome.
    pub mutation_prob: f64,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 40,
            generations: 60,
            crossover_prob: 0.9,
            mutation_prob: 1.0 / 3.0,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
        }
    }
}

/// Particle-swarm settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self { particles: 30, iterations: 60, inertia: 0.7, cognitive: 1.5, social: 1.5 }
    }
}

/// Simulated-annealing settings with a geometric temperature schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub steps: usize,
    pub initial_temp: f64,
    pub final_temp: f64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self { steps: 1500, initial_temp: 1.0, final_temp: 1e-3 }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream `stream` of a master seed. Individuals,
/// particles, and annealing steps each own a counter-derived stream, so the
/// result never depends on evaluation order.
pub fn derive_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(stream)))
}

/// Well-mixed sub-seed for handing a distinct master seed to a nested
/// component (scenario layout, replanning attempts, grid repetitions).
pub fn derive_seed(master_seed: u64, salt: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(salt))
}
