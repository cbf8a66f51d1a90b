//! Deterministic discrete-event simulator of wireless multi-hop networks
//! running OLSR and its multipath extension MP-OLSR, with three pluggable
//! link-failure recovery schemes: route-error notification, fast TC
//! flooding, and data re-emission over a reverse source route.
//!
//! The medium is an abstract unit disk (no MAC contention); a run is a pure
//! function of its configuration and seed.

pub mod graph;
pub mod kernel;
pub mod medium;
pub mod metrics;
pub mod mobility;
pub mod mpolsr;
pub mod olsr;
pub mod recovery;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod traffic;

pub use graph::{Disjointness, MultipathCostConfig};
pub use medium::MediumConfig;
pub use metrics::{analytic_bounds, Metrics};
pub use mobility::{dual_chain_layout, NodeId, Position, RwpConfig};
pub use olsr::ProtocolConfig;
pub use recovery::{RecoveryConfig, Scheme};
pub use scenario::{parse_config, run_batch, write_results, RunResult, ScenarioSpec};
pub use sim::{Protocol, RunOutput, SimConfig, Simulator};
pub use time::SimTime;
