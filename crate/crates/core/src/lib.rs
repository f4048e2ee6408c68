//! Simulation and numerical analysis of contagion among customers migrating
//! through infinite-server queueing networks.

pub mod analytic;
pub mod cli;
pub mod conservation;
pub mod couplings;
pub mod error;
pub mod fixed_point;
pub mod network;
pub mod observe;
pub mod params;
pub mod reactor;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use params::{derive_params, ModelParams, ReactorState};
pub use rng::RngSeed;
pub use stats::{ratio_estimate, Estimate};
