//! NR-U/Wi-Fi coexistence on a shared unlicensed channel, and a
//! state-augmented constrained Q-learning controller that tunes MAC
//! parameters to keep high-priority access delay under a threshold while
//! maximizing airtime fairness.

// Validation uses `!(x > 0.0)` on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraint;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod medium;
pub mod metrics;

pub use error::{ConfigError, Error, Result};
