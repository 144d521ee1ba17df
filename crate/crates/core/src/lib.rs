//! Latency evaluation and bandwidth allocation for a two-station edge
//! computing network hosting two VR communities.
//!
//! Each station runs the server of one community. Users upload state updates
//! over HARQ-protected FDMA uplinks; users attached to the other community's
//! station also cross a wired backhaul. The server waits for the slowest
//! member of its community, computes, and multicasts the result back.
//!
//! - [`model`]: scenario constants, user counts, allocations and thresholds.
//! - [`sampler`]: reproducible attempt-count and backhaul draws.
//! - [`latency`]: Monte-Carlo upload term and closed-form compute/download terms.
//! - [`optimizer`]: downlink square-root split, uplink projected subgradient
//!   on a sample-average objective, equal baselines.
//! - [`harness`]: config files, cross-type ratio sweeps, CSV/JSON-lines output.

pub mod error;
pub mod harness;
pub mod latency;
pub mod model;
pub mod optimizer;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use latency::{end_to_end_report, LatencyReport};
pub use model::{ChannelDerived, Grid, ScenarioConfig, SpectrumAllocation, UserConfiguration};
pub use optimizer::{optimize_uplink, OptimizerSettings, OptimizerTrace, StepSize};
