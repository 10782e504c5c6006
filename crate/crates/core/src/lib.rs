//! Reliability-function bounds, confirmation-test analysis, entropy-drift checks and
//! scheme simulation for two-user multiple-access channels with noiseless feedback.

pub mod channel;
pub mod error;
pub mod infotheory;
pub mod lp;
pub mod num;
pub mod bounds;
pub mod corpus;
pub mod driftlab;
pub mod reproduce;
pub mod vlcsim;
pub mod hypotest;

pub use error::{Error, Result};
