//! Deterministic on-ramp merging simulator for a two-lane highway carrying
//! mixed human-driven and automated traffic.
//!
//! The crate layers as follows: [`traffic`] holds the longitudinal and
//! lateral vehicle models, [`collision`] the oriented-rectangle geometry,
//! [`planning`] the virtual-vehicle trajectory solver, [`objectives`] the
//! safety/fuel/efficiency costs, [`optimizer`] the multi-objective and
//! baseline search methods, and [`game`] the discretionary lane-change
//! decision. Everything is seed-deterministic: the same configuration and
//! seed reproduce byte-identical results.

pub mod collision;
pub mod config;
pub mod experiment;
pub mod game;
pub mod objectives;
pub mod optimizer;
pub mod planning;
pub mod sim;
pub mod traffic;
