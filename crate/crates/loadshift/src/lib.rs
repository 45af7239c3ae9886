//! Load-shifting potential (LSP) analysis for multi-room HVAC buildings.
//!
//! The crate models a building as independent five-node RC rooms, schedules
//! heating and interruptible-load reserve capacity against market prices by
//! linear programming, and quantifies the building's demand flexibility by
//! perturbing prices and fitting demand-elasticity curves.

pub mod analysis;
pub mod building;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod scheduler;
pub mod synth;
pub mod thermal;

pub use error::{Error, Result};
