//! Closed-loop merge simulation: the stepped world, scenario construction,
//! the frozen planning scene, both controllers, and run measurement.

pub mod background;
pub mod fifo;
pub mod hcomc;
pub mod metrics;
pub mod result;
pub mod scenario;
pub mod scene;
pub mod world;

pub use world::{
    Dynamics, Lane, RoadGeometry, Role, SimEvent, Vehicle, VehicleId, VehicleKind, VirtualLeader,
    VirtualTarget, World,
};

use crate::config::{ControllerKind, SimConfig};
use result::RunRecord;

/// Runs one simulation under the configured controller.
pub fn run(cfg: &SimConfig) -> RunRecord {
    match cfg.controller {
        ControllerKind::Hcomc => hcomc::run_hcomc(cfg),
        ControllerKind::Fifo => fifo::run_fifo(cfg),
    }
}
