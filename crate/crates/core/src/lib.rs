//! Predictive resource allocation for non-real-time video over the residual
//! capacity of a cellular network.
//!
//! * [`channel`]: path loss, fading and rate formulas.
//! * [`prediction`]: predicted average rates and error statistics.
//! * [`planner`]: transmission planning as a linear program.
//! * [`scheduler`]: slot-level execution of a plan and baseline policies.
//! * [`simulator`]: Monte Carlo network experiments and QoS metrics.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod par;
pub mod planner;
pub mod prediction;
pub mod rng;
pub mod scheduler;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
