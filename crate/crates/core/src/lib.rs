//! Training and attacking a flow-based deep-Q-network intrusion detector.
//!
//! The pipeline: ingest or synthesize flow records, normalize them into a
//! fixed 76-feature space, train a small Q-network on the dataset-as-MDP,
//! then evade it with per-input gradient-sign attacks and universal
//! (input-agnostic) perturbations under network-domain constraints. The
//! evaluation harness sweeps attack strength and reports accuracy,
//! false-negative rate, fooling rate, and activation-correlation diagnostics.

pub mod attack;
pub mod constraint;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod profiles;
pub mod schema;
pub mod seeds;
pub mod sweep;
pub mod synth;
pub mod trainer;
pub mod uap;

pub use error::{Error, Result};
