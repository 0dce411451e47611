//! Multi-tenant quantum cloud simulator.
//!
//! Models a fair-share batch scheduler that co-locates several users'
//! circuits on one coupling graph, a SWAP router that maps each circuit onto
//! its allocated qubits, an adversary that floods the queue to push victims
//! onto poorly connected regions, and a one-class detector that flags such
//! users. The `experiment` module drives the sweeps and end-to-end scenarios.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod hardware;
pub mod router;
pub mod scalar;
pub mod scheduler;
pub mod sentinel;
pub mod stats;

pub use circuit::{Circuit, Gate, GateStats};
pub use error::{Error, Result};
pub use hardware::{CeAggregation, CouplingGraph, RankDirection};
pub use scalar::Real;

pub type Calibration = hardware::Calibration<f64>;
pub type QualityWeights = hardware::QualityWeights<f64>;
pub type Device = hardware::Device<f64>;
pub use adversary::{AttackPlan, ImpactConfig, ImpactReport};
pub use sentinel::ResponsePolicy;
pub type UserFeatures = sentinel::UserFeatures<f64>;
pub type AnomalyModel = sentinel::AnomalyModel<f64>;
pub use scheduler::{Batch, BatchEntry, FairShareQueue, Job, Priority, SchedulerConfig};
pub use experiment::{Scenario, SweepReport};
pub use router::{initial_layout, optimal_route, route, swap_overhead, Layout, RoutingResult};
