//! Planning engine for split inference on sensor/aggregator systems.
//!
//! * [`netgraph`]: network IR, shape inference, op and parameter counts.
//! * [`hwmodel`]: latency and sensor-memory cost model.
//! * [`splitspace`]: split-aware architecture space, materialization, sampling.
//! * [`initnum`]: initialization variances and Monte Carlo gain checks.
//! * [`fusion`]: interlaced multi-view channel layout.
//! * [`search`]: constrained evolutionary search and brute-force optimum.
//! * [`baselines`]: reference split strategies and the bundled model zoo.
//! * [`fixtures`]: generators for the bundled JSON inputs.

pub mod baselines;
pub mod error;
pub mod fixtures;
pub mod fusion;
pub mod hwmodel;
pub mod initnum;
pub mod netgraph;
pub mod par;
pub mod search;
pub mod splitspace;

pub use error::{Error, Result};
pub use hwmodel::{CostReport, Deployment, HardwareConfig};
pub use netgraph::{FeatureShape, LayerDesc, LayerKind, NetworkIR};
pub use par::Exec;
