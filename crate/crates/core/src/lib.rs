//! Simulation library for online learning with primary and secondary losses.
//!
//! Covers the bicriteria regret metrics, switching-limited base learners, the
//! epoch-batched meta-algorithm, deactivation oracles with the two sleeping
//! algorithms built on them, and executable lower-bound adversaries, plus an
//! experiment harness that turns runs into CSV rows and growth exponents.

pub mod adversaries;
pub mod error;
pub mod harness;
pub mod learners;
pub mod meta;
pub mod sleeping;
pub mod metrics;
pub mod stream;
pub mod trace;
pub mod types;

pub use error::{Error, Result};
pub use stream::{AdaptiveAdversary, LossStream, ObliviousStream};
pub use trace::{RunTrace, TraceBuilder};
pub use types::{ActiveSet, AssumptionParams, ExpertId, LossVectorPair, SimplexDistribution};
