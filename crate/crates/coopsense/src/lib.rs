//! Simulator and solver for RSU-assisted cooperative sensing among
//! connected autonomous vehicles (CAVs).
//!
//! A road side unit (RSU) and a fleet of CAVs jointly classify objects on a
//! road segment. Every object inside a CAV's region of interest is a sensing
//! task that can run either on the CAV (fusing its own LiDAR data with the
//! RSU broadcast) or on the RSU (which fuses the uploads of every CAV that
//! offloaded the object). The solver minimizes the total completion time of
//! all tasks, subject to a per-CAV average accuracy constraint, by searching
//! placements with a Gibbs sampler while allocating uplink subcarriers with
//! a greedy marginal-gain pass and CPU shares with an exact closed form.
//!
//! The crate is organized around the pipeline:
//!
//! * [`scenario`]: seeded generation of the static world (road, nodes,
//!   objects, region-of-interest membership),
//! * [`sensing`]: synthetic point clouds, per-object extraction, occupancy
//!   grids and data fusion,
//! * [`accuracy`]: pluggable accuracy models and the per-CAV constraint,
//! * [`comm`]: uplink sizes, link rates and subcarrier allocation,
//! * [`compute`]: processing demands and CPU-share allocation,
//! * [`planner`]: the two-layer solver plus baselines,
//! * [`validate`]: an independent constraint checker for solver output,
//! * [`harness`]: experiment runners and file emission behind the CLI.

pub mod accuracy;
pub mod comm;
pub mod compute;
pub mod config;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod planner;
pub mod scenario;
pub mod sensing;
pub mod validate;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
