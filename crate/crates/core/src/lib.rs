//! Core numerics for a two-class (electric / gasoline) nonatomic routing game
//! whose electricity price is produced by a closed-form water-filling
//! charging scheduler.
//!
//! The crate is `no_std` (it only needs `alloc`) and performs no IO. Modules:
//!
//! - [`network`]: road graph, BPR travel times, generalized arc and path costs,
//!   deterministic shortest paths.
//! - [`charging`]: the aggregator's scheduling problem solved in closed form,
//!   the resulting charging unit price and its monotonicity test.
//! - [`equilibrium`]: Beckmann potential of the coupled game, a conditional
//!   gradient solver and a Wardrop certificate.
//! - [`incentives`]: environmental cost, toll grid search and parameter sweeps.
//! - [`loaddata`]: day-to-slot aggregation of household load profiles and the
//!   monthly share of days with an increasing charging price.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod charging;
pub mod equilibrium;
mod error;
pub mod incentives;
pub mod loaddata;
pub mod network;
pub mod quadrature;

pub use charging::{ChargingScenario, ChargingSchedule, PriceMonotonicity, WaterFilling};
pub use equilibrium::{EquilibriumConfig, EquilibriumResult, WardropReport};
pub use error::{Error, Result};
pub use incentives::{EnvWeights, TollSweepResult};
pub use loaddata::{LoadDataset, SlotProfile};
pub use network::{
    Arc, ArcId, Class, ClassParams, FlowAssignment, NodeId, OdPair, PathFlow, PathId, PerClass, RoadNetwork,
};
