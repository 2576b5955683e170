//! Reliability-driven reconfiguration of radial distribution networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: bus/branch data model and the bundled 33- and 69-node feeders.
//! - [`topology`]: radiality (GF(2) incidence rank) and traversal checks, rooted trees.
//! - [`reliability`]: branch failure rates, node unavailability and average curtailed power.
//! - [`env`]: the switch-opening decision process and its terminal reward.
//! - [`dqn`]: a from-scratch Q-network, epsilon-greedy policy and the training loop.
//! - [`oracle`]: exhaustive enumeration of every open set, used to certify the agent.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*F64` aliases
//! below are what the command-line front end uses.

pub mod dqn;
pub mod env;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod reliability;
pub mod scalar;
pub mod topology;

pub use error::{ConstraintError, DataError, Error, NumericError, Result};
pub use grid::{BranchId, BusId, Configuration, Network};
pub use scalar::Scalar;

pub type ReliabilityModelF64 = reliability::ReliabilityModel<f64>;
pub type ReliabilityModelF32 = reliability::ReliabilityModel<f32>;
pub type QFunctionF64 = dqn::QFunction<f64>;
pub type QFunctionF32 = dqn::QFunction<f32>;
pub type EnvironmentF64<'a> = env::Environment<'a, f64>;
pub type EpisodeRecordF64 = dqn::EpisodeRecord<f64>;
pub type EnumerationReportF64 = oracle::EnumerationReport<f64>;
