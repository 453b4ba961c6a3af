//! Agent-based simulator of a Proof-of-Stake token economy in which agents
//! split their wealth between staking and an on-chain lending market.
//!
//! The model is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix it to `f64`.

// Negated comparisons are the NaN guards throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod claims;
pub mod config;
pub mod config_file;
pub mod error;
pub mod lending;
pub mod numeric;
pub mod optimizer;
pub mod policy;
pub mod pos;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod state;
pub mod sweep;

pub use config::{ModelKind, SimConfig};
pub use error::{Error, Result};
pub use lending::{DemandModel, RateCurve};
pub use policy::MonetaryPolicy;
pub use scalar::Real;
pub use sim::{metric_f, metric_g, run_trajectory, Simulation, Trajectory};
pub use sweep::{emit_heatmap_csv, run_sweep, HeatmapTable, SweepSpec};
pub use config_file::{load_config, parse_config, ConfigFile};
pub use state::{RiskProfile, SystemState};

pub type SimConfig64 = SimConfig<f64>;
pub type SystemState64 = SystemState<f64>;
pub type RiskProfile64 = RiskProfile<f64>;
pub type MonetaryPolicy64 = MonetaryPolicy<f64>;
pub type DemandModel64 = DemandModel<f64>;
pub type Trajectory64 = Trajectory<f64>;
