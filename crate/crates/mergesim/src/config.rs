//! Run configuration: TOML-backed, fully defaulted, validated with
//! key-path error messages. An empty file yields the default setup.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{FvTypeDistribution, GameConfig};
use crate::objectives::{FuelModelParams, SafetyParams};
use crate::optimizer::{GaConfig, PsoConfig, SaConfig, ScalarBounds};
use crate::traffic::IdmParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Hcomc,
    Fifo,
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::Hcomc => "hcomc",
            ControllerKind::Fifo => "fifo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Nsga2,
    Pso,
    Sa,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Nsga2 => "nsga2",
            OptimizerKind::Pso => "pso",
            OptimizerKind::Sa => "sa",
        })
    }
}

/// Lane layout and merge-region extents. The ramp runs parallel to the
/// rightmost main lane and becomes an acceleration lane over
/// `[accel_lane_start, accel_lane_end]`; merging is only possible there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    pub lane_width: f64,
    pub accel_lane_start: f64,
    pub accel_lane_end: f64,
    /// Reference point for projected-arrival ordering and platoon anchoring.
    pub merge_ref_x: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self { lane_width: 3.75, accel_lane_start: 300.0, accel_lane_end: 600.0, merge_ref_x: 450.0 }
    }
}

/// Initial traffic composition around the merge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub vehicles_per_lane: u32,
    /// Ramp vehicle speed at the control-zone entry (m/s).
    pub ramp_speed: f64,
    /// Nominal main-road speed (m/s).
    pub main_speed: f64,
    /// Mean time headway on the rightmost main lane (s).
    pub headway_main1: f64,
    /// Mean time headway on the far main lane (s).
    pub headway_main2: f64,
    /// Probability that a main-road vehicle is automated.
    pub cav_penetration: f64,
    /// Relative headway perturbation, sampled per vehicle from the run seed.
    pub headway_jitter: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            vehicles_per_lane: 8,
            ramp_speed: 18.0,
            main_speed: 25.0,
            headway_main1: 5.0,
            headway_main2: 5.0,
            cav_penetration: 0.9,
            headway_jitter: 0.05,
            vehicle_length: 5.0,
            vehicle_width: 2.0,
        }
    }
}

/// Human-driver perception delays and estimation-error settings layered on
/// the shared car-following parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdvConfig {
    pub gap_delay: f64,
    pub speed_delay: f64,
    pub dspeed_delay: f64,
    /// Half-width of the uniform band the error factors are drawn from;
    /// zero keeps perception exact.
    pub error_jitter: f64,
    /// How often the error factors are redrawn (s).
    pub resample_period: f64,
}

impl Default for HdvConfig {
    fn default() -> Self {
        Self {
            gap_delay: 0.5,
            speed_delay: 0.5,
            dspeed_delay: 0.5,
            error_jitter: 0.0,
            resample_period: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavConfig {
    /// Blend weight of the anticipatory term over plain car-following.
    pub cah_weight: f64,
}

impl Default for CavConfig {
    fn default() -> Self {
        Self { cah_weight: 0.99 }
    }
}

/// Cooperative-merge planner settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Earliest merge-completion time relative to planning time (s).
    pub horizon_min: f64,
    /// Latest merge-completion time relative to planning time (s).
    pub horizon_max: f64,
    /// Number of completion-time grid points; unset keeps the interval
    /// continuous. The default spaces them one simulation step apart:
    /// the executor acts on step boundaries, so finer times are spurious
    /// precision that only adds noise when comparing optimizers.
    pub time_grid: Option<u32>,
    /// Whether merging behind the cooperating vehicle is searched.
    pub behind_allowed: bool,
    /// Post-merge rollout extension used when scoring candidates (s).
    pub settle: f64,
    /// Length of the smooth handover between acceleration references (s).
    pub blend_duration: f64,
    /// Lane-change duration (s).
    pub lc_duration: f64,
    /// How often planning is retried while no feasible plan is held (s).
    pub replan_period: f64,
    /// Acceleration envelope a guidance trajectory may demand (m/s^2).
    pub max_accel: f64,
    pub max_decel: f64,
    /// Distance before the acceleration-lane end where an unmerged ramp
    /// vehicle must have stopped (m).
    pub stop_margin: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon_min: 5.0,
            horizon_max: 25.0,
            time_grid: Some(201),
            behind_allowed: true,
            settle: 5.0,
            blend_duration: 2.0,
            lc_duration: 4.0,
            replan_period: 1.0,
            max_accel: 2.5,
            max_decel: 4.0,
            stop_margin: 5.0,
        }
    }
}

/// Discretionary lane-change settings for main-road traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    /// Whether background vehicles weigh discretionary lane changes at all.
    pub enabled: bool,
    /// Decision cadence (s).
    pub cadence: f64,
    /// Expected-cost margin a change must clear over keeping the lane.
    /// Hysteresis: without it, near-symmetric lanes produce endless swaps.
    pub switch_threshold: f64,
    /// Lane-hold time after a completed discretionary change (s).
    pub cooldown: f64,
    pub rules: GameConfig,
    pub styles: FvTypeDistribution,
}

impl Default for GameSection {
    fn default() -> Self {
        Self {
            enabled: true,
            cadence: 1.0,
            switch_threshold: 0.5,
            cooldown: 10.0,
            rules: GameConfig::default(),
            styles: FvTypeDistribution::default(),
        }
    }
}

/// Post-run measurement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Speeds below this threshold accrue low-speed exposure (m/s).
    pub low_speed_threshold: f64,
    /// Acceleration magnitude treated as settled (m/s^2).
    pub stability_accel: f64,
    /// How long all key vehicles must stay settled (s).
    pub stability_hold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { low_speed_threshold: 15.0, stability_accel: 0.05, stability_hold: 3.0 }
    }
}

/// The whole run setup. Every field has a default, so partial files and the
/// empty file are valid configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub dt: f64,
    /// Wall-clock length of one simulated run (s).
    pub duration: f64,
    pub controller: ControllerKind,
    pub optimizer: OptimizerKind,
    pub road: RoadConfig,
    pub traffic: TrafficConfig,
    pub idm: IdmParams,
    pub hdv: HdvConfig,
    pub cav: CavConfig,
    pub safety: SafetyParams,
    pub fuel: FuelModelParams,
    pub planner: PlannerConfig,
    pub game: GameSection,
    pub ga: GaConfig,
    pub pso: PsoConfig,
    pub sa: SaConfig,
    pub scalar: ScalarBounds,
    pub metrics: MetricsConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            dt: 0.1,
            duration: 60.0,
            controller: ControllerKind::Hcomc,
            optimizer: OptimizerKind::Nsga2,
            road: RoadConfig::default(),
            traffic: TrafficConfig::default(),
            idm: IdmParams::default(),
            hdv: HdvConfig::default(),
            cav: CavConfig::default(),
            safety: SafetyParams::default(),
            fuel: FuelModelParams::default(),
            planner: PlannerConfig::default(),
            game: GameSection::default(),
            ga: GaConfig::default(),
            pso: PsoConfig::default(),
            sa: SaConfig::default(),
            scalar: ScalarBounds::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt <= 0.5) {
            return Err(invalid("dt", format!("must lie in (0, 0.5], got {}", self.dt)));
        }
        if !(self.duration > 0.0) {
            return Err(invalid("duration", "must be positive"));
        }
        let r = &self.road;
        if !(r.lane_width > 0.0) {
            return Err(invalid("road.lane_width", "must be positive"));
        }
        if !(r.accel_lane_start > 0.0 && r.accel_lane_end > r.accel_lane_start) {
            return Err(invalid(
                "road.accel_lane_end",
                "acceleration lane must have positive length past a positive start",
            ));
        }
        if !(r.merge_ref_x > r.accel_lane_start && r.merge_ref_x < r.accel_lane_end) {
            return Err(invalid("road.merge_ref_x", "must sit inside the acceleration lane"));
        }
        let t = &self.traffic;
        if t.vehicles_per_lane == 0 {
            return Err(invalid("traffic.vehicles_per_lane", "must be at least 1"));
        }
        if !(t.ramp_speed > 0.0) {
            return Err(invalid("traffic.ramp_speed", "speeds must be positive"));
        }
        if !(t.main_speed > 0.0) {
            return Err(invalid("traffic.main_speed", "speeds must be positive"));
        }
        if !(t.headway_main1 >= 1.0) {
            return Err(invalid("traffic.headway_main1", "headways under 1 s leave no usable gaps"));
        }
        if !(t.headway_main2 >= 1.0) {
            return Err(invalid("traffic.headway_main2", "headways under 1 s leave no usable gaps"));
        }
        if !(0.0..=1.0).contains(&t.cav_penetration) {
            return Err(invalid(
                "traffic.cav_penetration",
                format!("must lie in [0, 1], got {}", t.cav_penetration),
            ));
        }
        if !(0.0..=0.5).contains(&t.headway_jitter) {
            return Err(invalid("traffic.headway_jitter", "must lie in [0, 0.5]"));
        }
        if !(t.vehicle_length > 0.0) {
            return Err(invalid("traffic.vehicle_length", "dimensions must be positive"));
        }
        if !(t.vehicle_width > 0.0) {
            return Err(invalid("traffic.vehicle_width", "dimensions must be positive"));
        }
        if t.vehicle_width >= r.lane_width {
            return Err(invalid("traffic.vehicle_width", "must be narrower than the lane"));
        }
        let idm = &self.idm;
        if !(idm.max_accel > 0.0
            && idm.desired_speed > 0.0
            && idm.accel_exponent > 0.0
            && idm.min_gap > 0.0
            && idm.time_headway > 0.0
            && idm.comfort_decel > 0.0)
        {
            return Err(invalid("idm", "all car-following parameters must be positive"));
        }
        if idm.emergency_decel < idm.comfort_decel {
            return Err(invalid(
                "idm.emergency_decel",
                "must be at least the comfortable deceleration",
            ));
        }
        let h = &self.hdv;
        for (path, delay) in [
            ("hdv.gap_delay", h.gap_delay),
            ("hdv.speed_delay", h.speed_delay),
            ("hdv.dspeed_delay", h.dspeed_delay),
        ] {
            if !(0.0..=5.0).contains(&delay) {
                return Err(invalid(path, "must lie in [0, 5] seconds"));
            }
        }
        if !(0.0..=0.5).contains(&h.error_jitter) {
            return Err(invalid("hdv.error_jitter", "must lie in [0, 0.5]"));
        }
        if !(h.resample_period > 0.0) {
            return Err(invalid("hdv.resample_period", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.cav.cah_weight) {
            return Err(invalid("cav.cah_weight", "must lie in [0, 1]"));
        }
        let s = &self.safety;
        if !(s.standstill_margin >= 0.0
            && s.reaction_time >= 0.0
            && s.merge_max_decel > 0.0
            && s.accept_threshold > 0.0)
        {
            return Err(invalid("safety", "margins and limits must be non-negative, decel and threshold positive"));
        }
        let p = &self.planner;
        if !(p.horizon_min >= 1.0) {
            return Err(invalid("planner.horizon_min", "must be at least 1 s"));
        }
        if !(p.horizon_max > p.horizon_min) {
            return Err(invalid("planner.horizon_max", "must exceed planner.horizon_min"));
        }
        if let Some(g) = p.time_grid {
            if g < 2 {
                return Err(invalid("planner.time_grid", "needs at least 2 points"));
            }
        }
        if !(p.settle >= 0.0) {
            return Err(invalid("planner.settle", "must be non-negative"));
        }
        if !(p.blend_duration > 0.0) {
            return Err(invalid("planner.blend_duration", "must be positive"));
        }
        if !(p.lc_duration > 0.0) {
            return Err(invalid("planner.lc_duration", "must be positive"));
        }
        if !(p.replan_period > 0.0) {
            return Err(invalid("planner.replan_period", "must be positive"));
        }
        if !(p.max_accel > 0.0 && p.max_decel > 0.0) {
            return Err(invalid("planner.max_accel", "guidance limits must be positive"));
        }
        if !(p.stop_margin >= 0.0) {
            return Err(invalid("planner.stop_margin", "must be non-negative"));
        }
        let g = &self.game;
        if !(g.cadence > 0.0) {
            return Err(invalid("game.cadence", "must be positive"));
        }
        if !(g.switch_threshold >= 0.0) {
            return Err(invalid("game.switch_threshold", "must be non-negative"));
        }
        if !(g.cooldown >= 0.0) {
            return Err(invalid("game.cooldown", "must be non-negative"));
        }
        if g.styles.validate().is_err() {
            return Err(invalid("game.styles", "probabilities must be non-negative and sum to 1"));
        }
        if !(g.rules.horizon > 0.0 && g.rules.dt > 0.0) {
            return Err(invalid("game.rules.horizon", "rollout horizon and step must be positive"));
        }
        if g.rules.safety_weight < 0.0
            || g.rules.efficiency_weight < 0.0
            || g.rules.comfort_weight < 0.0
        {
            return Err(invalid("game.rules.safety_weight", "weights must be non-negative"));
        }
        let ga = &self.ga;
        if ga.population < 2 {
            return Err(invalid("ga.population", "must be at least 2"));
        }
        if ga.generations == 0 {
            return Err(invalid("ga.generations", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&ga.crossover_prob) || !(0.0..=1.0).contains(&ga.mutation_prob) {
            return Err(invalid("ga.crossover_prob", "probabilities must lie in [0, 1]"));
        }
        if !(ga.sbx_eta > 0.0 && ga.mutation_eta > 0.0) {
            return Err(invalid("ga.sbx_eta", "distribution indices must be positive"));
        }
        let pso = &self.pso;
        if pso.particles == 0 {
            return Err(invalid("pso.particles", "must be at least 1"));
        }
        if pso.iterations == 0 {
            return Err(invalid("pso.iterations", "must be at least 1"));
        }
        if !(0.0..=1.5).contains(&pso.inertia) {
            return Err(invalid("pso.inertia", "must lie in [0, 1.5]"));
        }
        if !(pso.cognitive >= 0.0 && pso.social >= 0.0) {
            return Err(invalid("pso.cognitive", "pull coefficients must be non-negative"));
        }
        let sa = &self.sa;
        if !(sa.initial_temp > 0.0 && sa.final_temp > 0.0 && sa.final_temp < sa.initial_temp) {
            return Err(invalid("sa.initial_temp", "cooling needs initial_temp > final_temp > 0"));
        }
        let m = &self.metrics;
        if !(m.low_speed_threshold > 0.0 && m.stability_accel > 0.0 && m.stability_hold > 0.0) {
            return Err(invalid("metrics.low_speed_threshold", "thresholds must be positive"));
        }
        Ok(())
    }
}

/// The five preset traffic mixes used by the experiment grid: headway of
/// each main lane (s) and the share of automated main-road vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Condition {
    #[value(name = "1")]
    #[serde(rename = "1")]
    C1,
    #[value(name = "2")]
    #[serde(rename = "2")]
    C2,
    #[value(name = "3")]
    #[serde(rename = "3")]
    C3,
    #[value(name = "4")]
    #[serde(rename = "4")]
    C4,
    #[value(name = "5")]
    #[serde(rename = "5")]
    C5,
}

pub const CONDITIONS: [Condition; 5] =
    [Condition::C1, Condition::C2, Condition::C3, Condition::C4, Condition::C5];

impl Condition {
    pub fn index(self) -> usize {
        match self {
            Condition::C1 => 1,
            Condition::C2 => 2,
            Condition::C3 => 3,
            Condition::C4 => 4,
            Condition::C5 => 5,
        }
    }

    pub fn preset_toml(self) -> &'static str {
        match self {
            Condition::C1 => include_str!("../presets/condition1.toml"),
            Condition::C2 => include_str!("../presets/condition2.toml"),
            Condition::C3 => include_str!("../presets/condition3.toml"),
            Condition::C4 => include_str!("../presets/condition4.toml"),
            Condition::C5 => include_str!("../presets/condition5.toml"),
        }
    }

    /// Default configuration with this preset's traffic mix applied.
    pub fn config(self) -> SimConfig {
        SimConfig::from_toml_str(self.preset_toml()).expect("presets ship valid")
    }

    /// Applies just the preset traffic keys onto an existing configuration.
    pub fn apply(self, cfg: &mut SimConfig) {
        let preset = self.config();
        cfg.traffic.headway_main1 = preset.traffic.headway_main1;
        cfg.traffic.headway_main2 = preset.traffic.headway_main2;
        cfg.traffic.cav_penetration = preset.traffic.cav_penetration;
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_configuration() {
        let cfg = SimConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let cfg = SimConfig::from_toml_str(
            "seed = 7\n[traffic]\ncav_penetration = 0.3\n[ga]\npopulation = 12\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.traffic.cav_penetration, 0.3);
        assert_eq!(cfg.ga.population, 12);
        assert_eq!(cfg.dt, SimConfig::default().dt);
        assert_eq!(cfg.traffic.headway_main1, 5.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SimConfig::from_toml_str("not_a_key = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        let err = SimConfig::from_toml_str("[traffic]\nheadway_main3 = 4.0\n").unwrap_err();
        assert!(err.to_string().contains("headway_main3"), "{err}");
    }

    #[test]
    fn validation_errors_name_the_key_path() {
        let err = SimConfig::from_toml_str("[traffic]\ncav_penetration = 1.4\n").unwrap_err();
        assert!(err.to_string().contains("traffic.cav_penetration"), "{err}");
        let err = SimConfig::from_toml_str("dt = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
        let err = SimConfig::from_toml_str("[planner]\nhorizon_max = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("planner.horizon_max"), "{err}");
    }

    #[test]
    fn presets_parse_and_differ_in_the_documented_keys() {
        let base = Condition::C1.config();
        assert_eq!(base.traffic.headway_main1, 5.0);
        assert_eq!(base.traffic.headway_main2, 5.0);
        assert_eq!(base.traffic.cav_penetration, 0.9);
        assert_eq!(Condition::C2.config().traffic.headway_main2, 7.0);
        assert_eq!(Condition::C3.config().traffic.headway_main2, 3.0);
        assert_eq!(Condition::C4.config().traffic.cav_penetration, 0.6);
        assert_eq!(Condition::C5.config().traffic.cav_penetration, 0.3);
        for c in CONDITIONS {
            let cfg = c.config();
            assert!(cfg.validate().is_ok());
            assert_eq!(cfg.seed, SimConfig::default().seed, "presets only touch traffic keys");
        }
    }

    #[test]
    fn apply_overwrites_only_the_traffic_mix() {
        let mut cfg = SimConfig::default();
        cfg.seed = 1234;
        cfg.ga.population = 10;
        Condition::C5.apply(&mut cfg);
        assert_eq!(cfg.traffic.cav_penetration, 0.3);
        assert_eq!(cfg.seed, 1234);
        assert_eq!(cfg.ga.population, 10);
    }
}
